#include "crseg/regretlab.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "crseg/projections.hpp"

namespace crseg {

double ConvexTestbed::value(std::span<const double> z) const {
  if (static_cast<int>(z.size()) != dim) throw std::invalid_argument("testbed point has wrong dimension");
  if (kind == Kind::Quadratic) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
      double d = z[i] - z_star[i];
      acc += d * d;
    }
    return 0.5 * acc + offset;
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < planes_a.size(); ++p) {
    double v = planes_b[p];
    for (int i = 0; i < dim; ++i) v += planes_a[p][i] * z[i];
    best = std::max(best, v);
  }
  return best;
}

std::vector<double> ConvexTestbed::gradient(std::span<const double> z) const {
  if (static_cast<int>(z.size()) != dim) throw std::invalid_argument("testbed point has wrong dimension");
  if (kind == Kind::Quadratic) {
    std::vector<double> g(dim);
    for (int i = 0; i < dim; ++i) g[i] = z[i] - z_star[i];
    return g;
  }
  std::size_t arg = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < planes_a.size(); ++p) {
    double v = planes_b[p];
    for (int i = 0; i < dim; ++i) v += planes_a[p][i] * z[i];
    if (v > best) {
      best = v;
      arg = p;
    }
  }
  return planes_a[arg];
}

ConvexTestbed ConvexTestbed::quadratic(std::vector<double> z_star, double radius, double offset) {
  if (z_star.empty()) throw std::invalid_argument("empty center");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  ConvexTestbed bed;
  bed.kind = Kind::Quadratic;
  bed.dim = static_cast<int>(z_star.size());
  bed.radius = radius;
  bed.z_star = z_star;
  bed.offset = offset;
  double cn = lp_norm(std::span<const double>(z_star), NormKind::L2);
  if (cn > radius) throw std::invalid_argument("optimum lies outside the domain ball");
  bed.optimum_point = std::move(z_star);
  bed.optimum_value = offset;
  // sup over the ball of ||z - z*||, attained on the boundary opposite z*.
  bed.lipschitz = radius + cn;
  return bed;
}

ConvexTestbed ConvexTestbed::piecewise_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                                              double radius, std::vector<double> optimum,
                                              double optimum_value) {
  if (a.empty() || a.size() != b.size()) throw std::invalid_argument("bad plane set");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  ConvexTestbed bed;
  bed.kind = Kind::PiecewiseLinearMax;
  bed.dim = static_cast<int>(a[0].size());
  bed.radius = radius;
  for (const auto& row : a)
    if (static_cast<int>(row.size()) != bed.dim) throw std::invalid_argument("ragged plane set");
  bed.planes_a = std::move(a);
  bed.planes_b = std::move(b);
  for (const auto& row : bed.planes_a)
    bed.lipschitz = std::max(bed.lipschitz, lp_norm(std::span<const double>(row), NormKind::L2));

  if (lp_norm(std::span<const double>(optimum), NormKind::L2) > radius)
    throw std::invalid_argument("optimum lies outside the domain ball");
  if (std::abs(bed.value(optimum) - optimum_value) > 1e-9)
    throw std::invalid_argument("claimed optimum value does not match the objective");
  // Coarse sanity probe: no axis point of the ball should beat the claimed optimum.
  std::vector<double> probe(bed.dim, 0.0);
  for (int i = 0; i < bed.dim; ++i) {
    for (double s : {-radius, 0.0, radius}) {
      probe[i] = s;
      if (bed.value(probe) < optimum_value - 1e-9)
        throw std::invalid_argument("claimed optimum is not optimal on the probe grid");
    }
    probe[i] = 0.0;
  }
  bed.optimum_point = std::move(optimum);
  bed.optimum_value = optimum_value;
  return bed;
}

RegretSchedule RegretSchedule::theorem(const ConvexTestbed& bed, int rounds) {
  if (rounds < 1) throw std::invalid_argument("rounds must be positive");
  if (!(bed.lipschitz > 0.0)) throw std::invalid_argument("degenerate testbed");
  RegretSchedule s;
  double n = static_cast<double>(bed.dim);
  s.alpha = std::sqrt(n) / (2.0 * bed.lipschitz * std::sqrt(static_cast<double>(rounds)));
  s.gamma = std::pow(n, 1.5) / (6.0 * std::sqrt(static_cast<double>(rounds)));
  return s;
}

LabTrace run_regret(const ConvexTestbed& bed, int rounds, const RegretSchedule& schedule,
                    const RandomSource& rng) {
  if (rounds < 10) throw std::invalid_argument("regret run needs at least 10 rounds");
  if (!(schedule.alpha > 0.0) || !(schedule.gamma > 0.0))
    throw std::invalid_argument("schedule must be positive");

  LabTrace trace;
  trace.rounds.reserve(rounds);
  std::vector<double> z(bed.dim, 0.0);
  LossFn f = [&](std::span<const double> p) { return bed.value(p); };
  double cum = 0.0;
  for (int t = 1; t <= rounds; ++t) {
    cum += bed.value(z) - bed.optimum_value;
    RandomSource round_rng = rng.split(static_cast<std::uint64_t>(t));
    GradientEstimate g = tpge_estimate(f, z, schedule.gamma, round_rng);
    for (int i = 0; i < bed.dim; ++i) z[i] -= schedule.alpha * g.gradient[i];
    z = project_l2(z, bed.radius);
    trace.rounds.push_back({t, bed.value(z), cum});
  }
  trace.final_regret = cum;
  return trace;
}

std::vector<EstimatorDiagnostics> estimator_diagnostics(const ConvexTestbed& bed,
                                                        std::span<const double> point,
                                                        std::span<const double> gammas, int samples,
                                                        const RandomSource& rng) {
  if (samples < 1000) throw std::invalid_argument("diagnostics need at least 1e3 samples");
  if (lp_norm(point, NormKind::L2) >= bed.radius)
    throw std::invalid_argument("diagnostic point must be interior");

  LossFn f = [&](std::span<const double> p) { return bed.value(p); };
  std::vector<double> true_grad = bed.gradient(point);
  std::vector<EstimatorDiagnostics> report;
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    EstimatorDiagnostics diag;
    diag.gamma = gammas[gi];
    diag.norm_bound = static_cast<double>(bed.dim) * bed.lipschitz;

    std::vector<double> mean(bed.dim, 0.0), m2(bed.dim, 0.0);
    RandomSource tp_rng = rng.split(2 * gi);
    RandomSource op_rng = rng.split(2 * gi + 1);
    for (int s = 0; s < samples; ++s) {
      GradientEstimate g = tpge_estimate(f, point, diag.gamma, tp_rng);
      diag.tpge_max_norm = std::max(diag.tpge_max_norm, lp_norm(std::span<const double>(g.gradient), NormKind::L2));
      for (int i = 0; i < bed.dim; ++i) {
        double d = g.gradient[i] - mean[i];
        mean[i] += d / static_cast<double>(s + 1);
        m2[i] += d * (g.gradient[i] - mean[i]);
      }
      GradientEstimate o = opge_estimate(f, point, diag.gamma, op_rng);
      diag.opge_max_norm = std::max(diag.opge_max_norm, lp_norm(std::span<const double>(o.gradient), NormKind::L2));
    }
    // Report the component with the worst error-to-allowance ratio, so
    // mean_err <= err_limit holds iff every component is within 3 SE.
    double worst = -1.0;
    for (int i = 0; i < bed.dim; ++i) {
      double se = std::sqrt(m2[i] / static_cast<double>(samples - 1)) / std::sqrt(static_cast<double>(samples));
      double err = std::abs(mean[i] - true_grad[i]);
      double ratio = err / (3.0 * se + 1e-300);
      if (ratio > worst) {
        worst = ratio;
        diag.tpge_mean_max_err = err;
        diag.tpge_err_limit = 3.0 * se;
      }
    }
    report.push_back(diag);
  }
  return report;
}

double fit_loglog_slope(std::span<const double> t_values, std::span<const double> regrets) {
  if (t_values.size() != regrets.size() || t_values.size() < 2)
    throw std::invalid_argument("slope fit needs >= 2 matched points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(t_values.size());
  for (std::size_t i = 0; i < t_values.size(); ++i) {
    if (!(t_values[i] > 0.0) || !(regrets[i] > 0.0))
      throw std::invalid_argument("slope fit needs positive values");
    double lx = std::log(t_values[i]);
    double ly = std::log(regrets[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string regret_report_csv(std::span<const double> t_values, std::span<const double> regrets,
                              double slope, std::span<const EstimatorDiagnostics> diags) {
  std::ostringstream out;
  out.precision(10);
  out << "kind,T,gamma,regret,slope_fit,tpge_max_norm,opge_max_norm,norm_bound,mean_err,err_limit\n";
  for (std::size_t i = 0; i < t_values.size(); ++i)
    out << "regret," << t_values[i] << ",," << regrets[i] << "," << slope << ",,,,,\n";
  for (const auto& d : diags)
    out << "estimator,," << d.gamma << ",,," << d.tpge_max_norm << "," << d.opge_max_norm << ","
        << d.norm_bound << "," << d.tpge_mean_max_err << "," << d.tpge_err_limit << "\n";
  return out.str();
}

}  // namespace crseg
