#include "crseg/gradest.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "crseg/projections.hpp"

namespace crseg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_args(std::span<const double> delta, double gamma) {
  if (delta.empty()) throw std::invalid_argument("gradient estimate over empty perturbation");
  if (!(gamma > 0.0)) throw std::invalid_argument("probe radius gamma must be positive");
}

}  // namespace

GradientEstimate zoo_estimate(const LossFn& loss, std::span<const double> delta, double gamma) {
  check_args(delta, gamma);
  GradientEstimate out;
  out.kind = EstimatorKind::Zoo;
  out.gamma = gamma;
  out.gradient.resize(delta.size());
  out.loss_plus = kNaN;
  out.loss_minus = kNaN;
  std::vector<double> probe(delta.begin(), delta.end());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    probe[i] = delta[i] + gamma;
    double lp = loss(probe);
    probe[i] = delta[i] - gamma;
    double lm = loss(probe);
    probe[i] = delta[i];
    out.gradient[i] = (lp - lm) / (2.0 * gamma);
  }
  out.queries_used = 2 * delta.size();
  return out;
}

GradientEstimate opge_along(const LossFn& loss, std::span<const double> delta, double gamma,
                            std::span<const double> u) {
  check_args(delta, gamma);
  if (u.size() != delta.size()) throw std::invalid_argument("direction dimension mismatch");
  std::vector<double> probe(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) probe[i] = delta[i] + gamma * u[i];
  double lp = loss(probe);

  GradientEstimate out;
  out.kind = EstimatorKind::Opge;
  out.gamma = gamma;
  double scale = static_cast<double>(delta.size()) / gamma * lp;
  out.gradient.resize(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) out.gradient[i] = scale * u[i];
  out.queries_used = 1;
  out.loss_plus = lp;
  out.loss_minus = kNaN;
  return out;
}

GradientEstimate opge_estimate(const LossFn& loss, std::span<const double> delta, double gamma,
                               RandomSource& rng) {
  check_args(delta, gamma);
  std::vector<double> u = sample_unit_sphere_l2(rng, delta.size());
  return opge_along(loss, delta, gamma, u);
}

GradientEstimate tpge_along(const LossFn& loss, std::span<const double> delta, double gamma,
                            std::span<const double> u) {
  check_args(delta, gamma);
  if (u.size() != delta.size()) throw std::invalid_argument("direction dimension mismatch");
  std::vector<double> probe(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) probe[i] = delta[i] + gamma * u[i];
  double lp = loss(probe);
  for (std::size_t i = 0; i < delta.size(); ++i) probe[i] = delta[i] - gamma * u[i];
  double lm = loss(probe);

  GradientEstimate out;
  out.kind = EstimatorKind::Tpge;
  out.gamma = gamma;
  double scale = static_cast<double>(delta.size()) / (2.0 * gamma) * (lp - lm);
  out.gradient.resize(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) out.gradient[i] = scale * u[i];
  out.queries_used = 2;
  out.loss_plus = lp;
  out.loss_minus = lm;
  return out;
}

GradientEstimate tpge_estimate(const LossFn& loss, std::span<const double> delta, double gamma,
                               RandomSource& rng) {
  check_args(delta, gamma);
  std::vector<double> u = sample_unit_sphere_l2(rng, delta.size());
  return tpge_along(loss, delta, gamma, u);
}

GradientEstimate cr_tpge_estimate(const LossFn& weighted_loss, std::span<const double> delta, double gamma,
                                  RandomSource& rng) {
  GradientEstimate out = tpge_estimate(weighted_loss, delta, gamma, rng);
  out.kind = EstimatorKind::CrTpge;
  return out;
}

double smoothed_loss_mc(const LossFn& loss, std::span<const double> delta, double gamma, int samples,
                        RandomSource& rng) {
  if (delta.empty()) throw std::invalid_argument("smoothed loss over empty perturbation");
  if (gamma < 0.0) throw std::invalid_argument("probe radius gamma must be nonnegative");
  if (samples < 1) throw std::invalid_argument("smoothed_loss_mc needs at least one sample");
  double acc = 0.0;
  std::vector<double> probe(delta.size());
  for (int s = 0; s < samples; ++s) {
    std::vector<double> v = sample_unit_ball_l2(rng, delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) probe[i] = delta[i] + gamma * v[i];
    acc += loss(probe);
  }
  return acc / static_cast<double>(samples);
}

}  // namespace crseg
