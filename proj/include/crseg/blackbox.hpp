#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "crseg/oracle.hpp"
#include "crseg/random.hpp"
#include "crseg/smoothing.hpp"
#include "crseg/tensor.hpp"

namespace crseg {

struct BlackBoxAttackConfig {
  NormKind norm = NormKind::L2;
  double eps = 1.0;
  int rounds = 1000;
  double alpha = 5e-4;
  double gamma = 0.01;
  bool cr_guided = false;
  // Black-box weight refreshes cost M counted queries each; interval default 2M.
  // The steeper weight slope keeps the profile informative at the small default
  // sigma: the transition happens near a fixed margin-to-sigma ratio rather
  // than a fixed absolute margin.
  SmoothingConfig smoothing{0.001, 8, 2000.0, -4.0, 16};
  std::optional<std::uint64_t> query_limit;
  // Every `bookkeep_interval` rounds spend one extra counted query on the plain
  // loss at the current delta, to track a best-so-far iterate. 0 disables the
  // probes, keeping the total at the analytic 2T (+ refresh) count.
  int bookkeep_interval = 0;
};

struct RoundRecord {
  int round = 0;  // 1-based, contiguous
  double loss_plus = 0.0;
  double loss_minus = 0.0;
  std::uint64_t queries_cum = 0;
  double grad_norm = 0.0;
};

struct Checkpoint {
  int round = 0;
  double loss = 0.0;       // plain mean CE at the current delta
  double best_loss = 0.0;  // running max, non-decreasing
  std::uint64_t queries_cum = 0;
};

struct RegretTrace {
  std::vector<RoundRecord> rounds;
  std::vector<Checkpoint> checkpoints;
  double best_loss = std::numeric_limits<double>::quiet_NaN();  // NaN without bookkeeping
};

struct BlackBoxResult {
  Perturbation delta;       // final iterate
  Perturbation delta_best;  // best bookkept iterate; equals delta when bookkeeping is off
  RegretTrace trace;
  bool budget_exhausted = false;
};

// Projected bandit gradient ascent. Each round samples a direction u on the
// unit l2 sphere, spends two queries at clip(x + delta +- gamma u), forms the
// two-point estimate (N / 2 gamma)(l+ - l-) u and projects delta + alpha g back
// onto the eps ball. Total queries: exactly 2T with bookkeeping off.
// On budget exhaustion the trace is truncated to completed rounds and the
// best-so-far perturbation is returned.
BlackBoxResult pbgd(BlackBoxOracle& oracle, const ImageTensor& x, const LabelMap& y,
                    const BlackBoxAttackConfig& cfg, const RandomSource& rng);

// Same loop on the robustness-weighted loss. Rounds t == 1 (mod INT), 1-based,
// refresh the weight map from M counted smoothing queries at the current
// iterate. Total queries: 2T + M * ceil(T / INT) with bookkeeping off.
BlackBoxResult cr_pbgd(BlackBoxOracle& oracle, const ImageTensor& x, const LabelMap& y,
                       const BlackBoxAttackConfig& cfg, const RandomSource& rng);

}  // namespace crseg
