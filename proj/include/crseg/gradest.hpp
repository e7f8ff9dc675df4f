#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "crseg/random.hpp"

namespace crseg {

// Scalar objective over the flat perturbation vector. Each evaluation is
// assumed to cost one oracle query; wrappers around attack_loss satisfy that.
using LossFn = std::function<double(std::span<const double>)>;

enum class EstimatorKind { Zoo, Opge, Tpge, CrTpge };

struct GradientEstimate {
  std::vector<double> gradient;
  EstimatorKind kind = EstimatorKind::Tpge;
  std::uint64_t queries_used = 0;
  double gamma = 0.0;
  // Probe values where the estimator took them (NaN when it did not).
  double loss_plus = 0.0;
  double loss_minus = 0.0;
};

// Coordinate-wise central differences: (L(d + g e_i) - L(d - g e_i)) / 2g.
// Costs 2N queries.
GradientEstimate zoo_estimate(const LossFn& loss, std::span<const double> delta, double gamma);

// One-point estimate (N / g) L(d + g u) u with u uniform on the unit sphere.
// One query; unbiased for the ball-smoothed loss but with unbounded scale.
GradientEstimate opge_estimate(const LossFn& loss, std::span<const double> delta, double gamma,
                               RandomSource& rng);

// Same estimators along a caller-chosen direction u (must be unit length for
// the usual guarantees; the formulas apply verbatim either way).
GradientEstimate opge_along(const LossFn& loss, std::span<const double> delta, double gamma,
                            std::span<const double> u);
GradientEstimate tpge_along(const LossFn& loss, std::span<const double> delta, double gamma,
                            std::span<const double> u);

// Two-point estimate (N / 2g) (L(d + g u) - L(d - g u)) u. Two queries; same
// expectation as the one-point form, norm bounded by N times the loss
// Lipschitz constant.
GradientEstimate tpge_estimate(const LossFn& loss, std::span<const double> delta, double gamma,
                               RandomSource& rng);

// Two-point estimate of the robustness-weighted objective. The weighting lives
// inside the callable; the probe algebra is identical to tpge_estimate.
GradientEstimate cr_tpge_estimate(const LossFn& weighted_loss, std::span<const double> delta, double gamma,
                                  RandomSource& rng);

// Monte-Carlo value of the ball-smoothed loss E_v[L(d + g v)], v uniform in the
// unit ball. Ground truth for the unbiasedness checks.
double smoothed_loss_mc(const LossFn& loss, std::span<const double> delta, double gamma, int samples,
                        RandomSource& rng);

}  // namespace crseg
