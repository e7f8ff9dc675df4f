#pragma once

#include <span>
#include <string>
#include <vector>

#include "crseg/gradest.hpp"
#include "crseg/random.hpp"

namespace crseg {

// Convex Lipschitz objective with a known optimum over the l2 ball of radius
// `radius`. Quadratic: f(z) = ||z - z*||^2 / 2 + offset. PiecewiseLinearMax:
// f(z) = max_i (a_i . z + b_i), subgradient from the first attaining plane.
struct ConvexTestbed {
  enum class Kind { Quadratic, PiecewiseLinearMax };

  Kind kind = Kind::Quadratic;
  int dim = 2;
  double radius = 1.0;
  std::vector<double> z_star;  // quadratic center
  double offset = 0.0;
  std::vector<std::vector<double>> planes_a;
  std::vector<double> planes_b;
  std::vector<double> optimum_point;
  double optimum_value = 0.0;
  double lipschitz = 0.0;  // valid over the domain ball

  double value(std::span<const double> z) const;
  std::vector<double> gradient(std::span<const double> z) const;

  static ConvexTestbed quadratic(std::vector<double> z_star, double radius, double offset = 0.0);
  // max_i (a_i . z + b_i); the optimum must be supplied by the caller and is
  // checked to lie inside the ball and to dominate a coarse grid probe.
  static ConvexTestbed piecewise_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                                        double radius, std::vector<double> optimum, double optimum_value);
};

struct RegretSchedule {
  // Step and probe sizes from the sublinear-regret analysis:
  // alpha = sqrt(N) / (2 C sqrt(T)), gamma = N^{3/2} / (6 sqrt(T)).
  static RegretSchedule theorem(const ConvexTestbed& bed, int rounds);
  double alpha = 0.0;
  double gamma = 0.0;
};

struct LabRound {
  int round = 0;
  double value = 0.0;       // f at the committed iterate this round
  double cum_regret = 0.0;  // sum of f(z_t) - f(z*)
};

struct LabTrace {
  std::vector<LabRound> rounds;
  double final_regret = 0.0;
};

// Projected bandit gradient descent minimizing the testbed objective from z=0,
// using the two-point estimator with the given schedule. Deterministic per rng
// identity; iterates never leave the domain ball.
LabTrace run_regret(const ConvexTestbed& bed, int rounds, const RegretSchedule& schedule,
                    const RandomSource& rng);

struct EstimatorDiagnostics {
  double gamma = 0.0;
  double tpge_max_norm = 0.0;
  double opge_max_norm = 0.0;
  double norm_bound = 0.0;        // N * C
  double tpge_mean_max_err = 0.0;  // worst component gap, MC mean vs analytic gradient
  double tpge_err_limit = 0.0;     // 3 standard errors for that component
};

// Sampling study at a fixed interior point: TPGE mean vs analytic gradient,
// max sample norms of TPGE vs OPGE against the N*C bound, per probe size.
std::vector<EstimatorDiagnostics> estimator_diagnostics(const ConvexTestbed& bed,
                                                        std::span<const double> point,
                                                        std::span<const double> gammas, int samples,
                                                        const RandomSource& rng);

// Least-squares slope of log(regret) against log(T).
double fit_loglog_slope(std::span<const double> t_values, std::span<const double> regrets);

// T,N,regret,slope_fit rows plus diagnostics rows, as consumed by the CLI.
std::string regret_report_csv(std::span<const double> t_values, std::span<const double> regrets,
                              double slope, std::span<const EstimatorDiagnostics> diags);

}  // namespace crseg
