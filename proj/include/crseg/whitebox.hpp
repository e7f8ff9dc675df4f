#pragma once

#include <cstdint>
#include <vector>

#include "crseg/oracle.hpp"
#include "crseg/random.hpp"
#include "crseg/smoothing.hpp"
#include "crseg/tensor.hpp"

namespace crseg {

struct WhiteBoxAttackConfig {
  NormKind norm = NormKind::Linf;
  double eps = 0.03;
  int steps = 20;
  double alpha = 0.0015;
  bool cr_guided = false;
  SmoothingConfig smoothing;
};

struct IterRecord {
  int iter = 0;             // 1-based
  double loss = 0.0;        // objective at the point the step was computed from
  std::uint64_t queries = 0;  // oracle query count after this iteration
};

struct AttackResult {
  Perturbation delta;
  std::vector<IterRecord> trace;
};

// Iterated ascent on the mean cross entropy. Per-norm step from the gradient g
// at clip(x + delta): L1 adds a * g / |g|_1, L2 adds a * g / |g|_2, Linf adds
// a * sign(g); the iterate is then projected back onto the eps ball.
AttackResult pgd(WhiteBoxOracle& oracle, const ImageTensor& x, const LabelMap& y,
                 const WhiteBoxAttackConfig& cfg);

// One PGD step with alpha = eps.
AttackResult fgsm(WhiteBoxOracle& oracle, const ImageTensor& x, const LabelMap& y, NormKind norm, double eps);

// PGD on the robustness-weighted loss. At iteration 0 and every
// cfg.smoothing.recompute_interval iterations the weight map is re-estimated
// from smoothed predictions at the current iterate (white-box, unmetered);
// in between, weights are reused.
AttackResult cr_pgd(WhiteBoxOracle& oracle, const ImageTensor& x, const LabelMap& y,
                    const WhiteBoxAttackConfig& cfg, const RandomSource& rng);

// Single-step variant: weights estimated once at the clean image.
AttackResult cr_fgsm(WhiteBoxOracle& oracle, const ImageTensor& x, const LabelMap& y, NormKind norm,
                     double eps, const SmoothingConfig& smoothing, const RandomSource& rng);

// Iterative linf attack via gradient differences: step direction is the
// gradient at the perturbed working image minus the gradient at the working
// image, rescaled to linf norm 0.5; the accumulated perturbation is clipped to
// [-eps, eps] and the working image advances by the rescaled step.
AttackResult dag(WhiteBoxOracle& oracle, const ImageTensor& x, const LabelMap& y, double eps, int steps);

}  // namespace crseg
