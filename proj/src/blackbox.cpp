#include "crseg/blackbox.hpp"

#include <cmath>
#include <stdexcept>

#include "crseg/projections.hpp"

namespace crseg {

namespace {

void check_cfg(const BlackBoxAttackConfig& cfg) {
  if (cfg.rounds < 1) throw std::invalid_argument("attack needs at least one round");
  if (!(cfg.alpha > 0.0) || !(cfg.gamma > 0.0)) throw std::invalid_argument("alpha and gamma must be positive");
  if (cfg.eps < 0.0) throw std::invalid_argument("eps must be non-negative");
  if (cfg.smoothing.recompute_interval < 1) throw std::invalid_argument("recompute interval must be >= 1");
  if (cfg.bookkeep_interval < 0) throw std::invalid_argument("bookkeep interval must be >= 0");
}

Perturbation as_perturbation(const std::vector<double>& delta, NormKind norm, double eps) {
  return make_perturbation(delta, norm, eps);
}

BlackBoxResult bandit_ascend(BlackBoxOracle& oracle, const ImageTensor& x, const LabelMap& y,
                             const BlackBoxAttackConfig& cfg, const RandomSource& rng) {
  check_cfg(cfg);
  const std::size_t N = x.data.size();
  BlackBoxResult result;
  std::vector<double> delta(N, 0.0);
  if (cfg.eps == 0.0) {
    result.delta = as_perturbation(delta, cfg.norm, 0.0);
    result.delta_best = result.delta;
    return result;
  }

  std::unique_ptr<BlackBoxOracle> capped;
  BlackBoxOracle* ora = &oracle;
  if (cfg.query_limit) {
    capped = with_counter(oracle, cfg.query_limit);
    ora = capped.get();
  }

  WeightMap weights;
  std::vector<double> best_delta = delta;
  double best_loss = -std::numeric_limits<double>::infinity();
  std::vector<double> probe(N);

  try {
    for (int t = 1; t <= cfg.rounds; ++t) {
      const WeightMap* w = nullptr;
      if (cfg.cr_guided) {
        if ((t - 1) % cfg.smoothing.recompute_interval == 0) {
          ProbMap sm = smoothed_probs([&](const ImageTensor& q) { return ora->predict(q); },
                                      clip_image(x, std::span<const double>(delta)), cfg.smoothing,
                                      rng.split(2 * static_cast<std::uint64_t>(t) + 1));
          weights = pixel_weights(pixel_certified_radius(sm, cfg.smoothing.sigma), cfg.smoothing.weight_a,
                                  cfg.smoothing.weight_b);
        }
        w = &weights;
      }

      RandomSource dir_rng = rng.split(2 * static_cast<std::uint64_t>(t));
      std::vector<double> u = sample_unit_sphere_l2(dir_rng, N);

      for (std::size_t i = 0; i < N; ++i) probe[i] = delta[i] + cfg.gamma * u[i];
      double lp = attack_loss(*ora, x, probe, y, w);
      for (std::size_t i = 0; i < N; ++i) probe[i] = delta[i] - cfg.gamma * u[i];
      double lm = attack_loss(*ora, x, probe, y, w);

      double scale = static_cast<double>(N) / (2.0 * cfg.gamma) * (lp - lm);
      for (std::size_t i = 0; i < N; ++i) delta[i] += cfg.alpha * scale * u[i];
      delta = project(delta, cfg.norm, cfg.eps);
      result.trace.rounds.push_back({t, lp, lm, oracle.queries().count(), std::abs(scale)});

      if (cfg.bookkeep_interval > 0 && t % cfg.bookkeep_interval == 0) {
        double cur = attack_loss(*ora, x, delta, y);  // plain objective, one counted query
        if (cur > best_loss) {
          best_loss = cur;
          best_delta = delta;
        }
        result.trace.checkpoints.push_back({t, cur, best_loss, oracle.queries().count()});
        result.trace.best_loss = best_loss;
      }
    }
  } catch (const QueryBudgetExhausted&) {
    result.budget_exhausted = true;
  }

  result.delta = as_perturbation(delta, cfg.norm, cfg.eps);
  if (result.trace.checkpoints.empty())
    result.delta_best = result.delta;
  else
    result.delta_best = as_perturbation(best_delta, cfg.norm, cfg.eps);
  return result;
}

}  // namespace

BlackBoxResult pbgd(BlackBoxOracle& oracle, const ImageTensor& x, const LabelMap& y,
                    const BlackBoxAttackConfig& cfg, const RandomSource& rng) {
  if (cfg.cr_guided) throw std::invalid_argument("pbgd expects cr_guided == false; use cr_pbgd");
  return bandit_ascend(oracle, x, y, cfg, rng);
}

BlackBoxResult cr_pbgd(BlackBoxOracle& oracle, const ImageTensor& x, const LabelMap& y,
                       const BlackBoxAttackConfig& cfg, const RandomSource& rng) {
  if (!cfg.cr_guided) throw std::invalid_argument("cr_pbgd expects cr_guided == true");
  return bandit_ascend(oracle, x, y, cfg, rng);
}

}  // namespace crseg
