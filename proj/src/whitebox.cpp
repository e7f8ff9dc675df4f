#include "crseg/whitebox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crseg/projections.hpp"

namespace crseg {

namespace {

void check_cfg(const WhiteBoxAttackConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("attack needs at least one step");
  if (!(cfg.alpha > 0.0)) throw std::invalid_argument("step size must be positive");
  if (cfg.eps < 0.0) throw std::invalid_argument("eps must be non-negative");
}

Perturbation as_perturbation(const std::vector<double>& delta, NormKind norm, double eps) {
  return make_perturbation(delta, norm, eps);
}

AttackResult zero_result(const ImageTensor& x, NormKind norm) {
  AttackResult r;
  r.delta.data.assign(x.data.size(), 0.0f);
  r.delta.norm = norm;
  r.delta.budget = 0.0;
  return r;
}

// delta += alpha * direction(g), with the per-norm normalization. A zero
// gradient leaves delta untouched.
void apply_step(std::vector<double>& delta, const std::vector<double>& g, NormKind norm, double alpha) {
  switch (norm) {
    case NormKind::L1: {
      double n = lp_norm(std::span<const double>(g), NormKind::L1);
      if (n == 0.0) return;
      for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += alpha * g[i] / n;
      return;
    }
    case NormKind::L2: {
      double n = lp_norm(std::span<const double>(g), NormKind::L2);
      if (n == 0.0) return;
      for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += alpha * g[i] / n;
      return;
    }
    case NormKind::Linf: {
      for (std::size_t i = 0; i < delta.size(); ++i) {
        double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
        delta[i] += alpha * s;
      }
      return;
    }
  }
  throw std::logic_error("bad NormKind");
}

AttackResult ascend(WhiteBoxOracle& oracle, const ImageTensor& x, const LabelMap& y,
                    const WhiteBoxAttackConfig& cfg, const RandomSource* rng) {
  check_cfg(cfg);
  if (cfg.eps == 0.0) return zero_result(x, cfg.norm);

  std::vector<double> delta(x.data.size(), 0.0);
  WeightMap weights;
  AttackResult result;
  for (int t = 0; t < cfg.steps; ++t) {
    const WeightMap* w = nullptr;
    if (cfg.cr_guided) {
      if (t % cfg.smoothing.recompute_interval == 0) {
        ProbMap sm = smoothed_probs([&](const ImageTensor& q) { return oracle.forward(q); },
                                    clip_image(x, std::span<const double>(delta)), cfg.smoothing,
                                    rng->split(static_cast<std::uint64_t>(t)));
        weights = pixel_weights(pixel_certified_radius(sm, cfg.smoothing.sigma), cfg.smoothing.weight_a,
                                cfg.smoothing.weight_b);
      }
      w = &weights;
    }
    InputGradient g = oracle.loss_gradient(clip_image(x, std::span<const double>(delta)), y, w);
    apply_step(delta, g.gradient, cfg.norm, cfg.alpha);
    delta = project(delta, cfg.norm, cfg.eps);
    result.trace.push_back({t + 1, g.loss, oracle.queries().count()});
  }
  result.delta = as_perturbation(delta, cfg.norm, cfg.eps);
  return result;
}

}  // namespace

AttackResult pgd(WhiteBoxOracle& oracle, const ImageTensor& x, const LabelMap& y,
                 const WhiteBoxAttackConfig& cfg) {
  if (cfg.cr_guided) throw std::invalid_argument("pgd expects cr_guided == false; use cr_pgd");
  return ascend(oracle, x, y, cfg, nullptr);
}

AttackResult fgsm(WhiteBoxOracle& oracle, const ImageTensor& x, const LabelMap& y, NormKind norm,
                  double eps) {
  if (eps == 0.0) return zero_result(x, norm);
  WhiteBoxAttackConfig cfg;
  cfg.norm = norm;
  cfg.eps = eps;
  cfg.steps = 1;
  cfg.alpha = eps;
  return ascend(oracle, x, y, cfg, nullptr);
}

AttackResult cr_pgd(WhiteBoxOracle& oracle, const ImageTensor& x, const LabelMap& y,
                    const WhiteBoxAttackConfig& cfg, const RandomSource& rng) {
  if (!cfg.cr_guided) throw std::invalid_argument("cr_pgd expects cr_guided == true");
  if (cfg.smoothing.recompute_interval < 1) throw std::invalid_argument("recompute interval must be >= 1");
  return ascend(oracle, x, y, cfg, &rng);
}

AttackResult cr_fgsm(WhiteBoxOracle& oracle, const ImageTensor& x, const LabelMap& y, NormKind norm,
                     double eps, const SmoothingConfig& smoothing, const RandomSource& rng) {
  if (eps == 0.0) return zero_result(x, norm);
  WhiteBoxAttackConfig cfg;
  cfg.norm = norm;
  cfg.eps = eps;
  cfg.steps = 1;
  cfg.alpha = eps;
  cfg.cr_guided = true;
  cfg.smoothing = smoothing;
  return cr_pgd(oracle, x, y, cfg, rng);
}

AttackResult dag(WhiteBoxOracle& oracle, const ImageTensor& x, const LabelMap& y, double eps, int steps) {
  if (eps < 0.0) throw std::invalid_argument("eps must be non-negative");
  if (steps < 0) throw std::invalid_argument("steps must be non-negative");
  AttackResult result = zero_result(x, NormKind::Linf);
  result.delta.budget = eps;
  if (eps == 0.0 || steps == 0) return result;

  std::vector<double> accum(x.data.size(), 0.0);  // the returned, clipped perturbation
  std::vector<double> drift(x.data.size(), 0.0);  // working image offset from x
  std::vector<double> prev_step(x.data.size(), 0.0);

  std::vector<double> probe(x.data.size());
  for (int t = 1; t <= steps; ++t) {
    for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = drift[i] + prev_step[i];
    InputGradient g1 = oracle.loss_gradient(clip_image(x, std::span<const double>(probe)), y);
    InputGradient g2 = oracle.loss_gradient(clip_image(x, std::span<const double>(drift)), y);

    std::vector<double> step(x.data.size());
    for (std::size_t i = 0; i < step.size(); ++i) step[i] = g1.gradient[i] - g2.gradient[i];
    double n = lp_norm(std::span<const double>(step), NormKind::Linf);
    if (n == 0.0) {
      // The recurrence starts both gradient points at the working image, so the
      // first difference is identically zero; the raw gradient seeds the walk.
      step = g1.gradient;
      n = lp_norm(std::span<const double>(step), NormKind::Linf);
    }
    if (n == 0.0) {
      result.trace.push_back({t, g2.loss, oracle.queries().count()});
      continue;
    }
    for (double& s : step) s *= 0.5 / n;

    for (std::size_t i = 0; i < accum.size(); ++i) {
      accum[i] = std::clamp(accum[i] + step[i], -eps, eps);
      drift[i] += step[i];
    }
    prev_step = std::move(step);
    result.trace.push_back({t, g2.loss, oracle.queries().count()});
  }
  result.delta = as_perturbation(accum, NormKind::Linf, eps);
  return result;
}

}  // namespace crseg
