#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "crseg/regretlab.hpp"

using namespace crseg;

namespace {

ConvexTestbed ridge_bed(double radius = 1.0) {
  // f(z) = |z1| + 1 over the l2 ball: non-smooth at the ridge z1 = 0.
  std::vector<std::vector<double>> a{{1.0, 0.0}, {-1.0, 0.0}};
  std::vector<double> b{1.0, 1.0};
  return ConvexTestbed::piecewise_linear(a, b, radius, {0.0, 0.0}, 1.0);
}

}  // namespace

TEST_CASE("quadratic testbed knows its own geometry") {
  ConvexTestbed bed = ConvexTestbed::quadratic({0.5, -0.3}, 1.0, 0.25);
  CHECK(bed.dim == 2);
  CHECK(bed.optimum_value == doctest::Approx(0.25));
  CHECK(bed.lipschitz == doctest::Approx(1.0 + std::hypot(0.5, 0.3)).epsilon(1e-12));

  std::vector<double> z{0.5, -0.3};
  CHECK(bed.value(z) == doctest::Approx(0.25).epsilon(1e-12));
  std::vector<double> g = bed.gradient(z);
  CHECK(g[0] == doctest::Approx(0.0));
  CHECK(g[1] == doctest::Approx(0.0));

  std::vector<double> w{1.0, 0.0};
  CHECK(bed.value(w) == doctest::Approx(0.25 + 0.5 * (0.25 + 0.09)).epsilon(1e-12));
  std::vector<double> gw = bed.gradient(w);
  CHECK(gw[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gw[1] == doctest::Approx(0.3).epsilon(1e-12));

  CHECK_THROWS_AS(ConvexTestbed::quadratic({2.0, 0.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ConvexTestbed::quadratic({0.5}, 0.0), std::invalid_argument);
  std::vector<double> wrong{1.0};
  CHECK_THROWS(bed.value(wrong));
}

TEST_CASE("piecewise-linear testbed evaluates the max of planes") {
  ConvexTestbed bed = ridge_bed();
  CHECK(bed.lipschitz == doctest::Approx(1.0));
  CHECK(bed.optimum_value == doctest::Approx(1.0));

  std::vector<double> z{0.5, 0.2};
  CHECK(bed.value(z) == doctest::Approx(1.5).epsilon(1e-12));
  std::vector<double> g = bed.gradient(z);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(0.0));

  std::vector<double> zn{-0.4, -0.9};
  CHECK(bed.value(zn) == doctest::Approx(1.4).epsilon(1e-12));
  CHECK(bed.gradient(zn)[0] == doctest::Approx(-1.0));

  // A plane set whose claimed optimum is wrong must be refused.
  std::vector<std::vector<double>> a{{1.0, 0.0}, {-1.0, 0.0}};
  std::vector<double> b{1.0, 1.0};
  CHECK_THROWS_AS(ConvexTestbed::piecewise_linear(a, b, 1.0, {0.5, 0.0}, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(ConvexTestbed::piecewise_linear(a, b, 1.0, {0.0, 0.0}, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(ConvexTestbed::piecewise_linear(a, b, 1.0, {2.0, 0.0}, 3.0), std::invalid_argument);
}

TEST_CASE("the schedule follows the sublinear-regret recipe") {
  ConvexTestbed bed = ConvexTestbed::quadratic({0.5, -0.3}, 1.0);
  RegretSchedule s = RegretSchedule::theorem(bed, 400);
  double n = 2.0;
  CHECK(s.alpha == doctest::Approx(std::sqrt(n) / (2.0 * bed.lipschitz * 20.0)).epsilon(1e-12));
  CHECK(s.gamma == doctest::Approx(std::pow(n, 1.5) / (6.0 * 20.0)).epsilon(1e-12));
  CHECK_THROWS(RegretSchedule::theorem(bed, 0));
}

TEST_CASE("regret runs are reproducible and accumulate monotonically") {
  ConvexTestbed bed = ConvexTestbed::quadratic({0.5, -0.3}, 1.0);
  RegretSchedule s = RegretSchedule::theorem(bed, 500);
  LabTrace a = run_regret(bed, 500, s, RandomSource(900, 0));
  LabTrace b = run_regret(bed, 500, s, RandomSource(900, 0));
  REQUIRE(a.rounds.size() == 500);
  CHECK(a.final_regret == b.final_regret);
  CHECK(a.final_regret > 0.0);
  for (std::size_t i = 1; i < a.rounds.size(); ++i) {
    CHECK(a.rounds[i].cum_regret >= a.rounds[i - 1].cum_regret - 1e-12);
    CHECK(a.rounds[i].round == static_cast<int>(i) + 1);
  }
  CHECK(a.final_regret == doctest::Approx(a.rounds.back().cum_regret));

  LabTrace c = run_regret(bed, 500, s, RandomSource(900, 1));
  CHECK(a.final_regret != c.final_regret);
  CHECK_THROWS(run_regret(bed, 5, s, RandomSource(0, 0)));
}

TEST_CASE("starting at the optimum of a centered quadratic incurs no regret") {
  ConvexTestbed bed = ConvexTestbed::quadratic({0.0, 0.0}, 1.0);
  RegretSchedule s = RegretSchedule::theorem(bed, 200);
  LabTrace t = run_regret(bed, 200, s, RandomSource(42, 0));
  // The two-point probe differences vanish at the center, so z never moves.
  CHECK(t.final_regret == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("average regret per round shrinks with the horizon") {
  ConvexTestbed bed = ConvexTestbed::quadratic({0.5, -0.3}, 1.0);
  std::vector<int> horizons{400, 4000};
  std::vector<double> per_round;
  for (int T : horizons) {
    RegretSchedule s = RegretSchedule::theorem(bed, T);
    LabTrace t = run_regret(bed, T, s, RandomSource(7, T));
    per_round.push_back(t.final_regret / T);
  }
  CHECK(per_round[1] < per_round[0]);
}

TEST_CASE("projection keeps every visited value bounded by the ball maximum") {
  ConvexTestbed bed = ConvexTestbed::quadratic({0.2, -0.1}, 0.3);
  RegretSchedule s;
  s.alpha = 10.0;  // absurd step; only the projection keeps this sane
  s.gamma = 0.01;
  LabTrace t = run_regret(bed, 50, s, RandomSource(3, 3));
  double worst = 0.5 * std::pow(0.3 + std::hypot(0.2, 0.1), 2.0) + 1e-9;
  for (const LabRound& r : t.rounds) CHECK(r.value <= worst);
}

TEST_CASE("ridge runs converge toward the valley") {
  // f = max(z1 + 1.2, -z1 + 0.8): the valley sits at z1 = -0.2, away from the start.
  std::vector<std::vector<double>> a{{1.0, 0.0}, {-1.0, 0.0}};
  std::vector<double> b{1.2, 0.8};
  ConvexTestbed bed = ConvexTestbed::piecewise_linear(a, b, 1.0, {-0.2, 0.0}, 1.0);
  RegretSchedule s = RegretSchedule::theorem(bed, 2000);
  LabTrace t = run_regret(bed, 2000, s, RandomSource(11, 0));
  CHECK(t.final_regret > 0.0);
  // Late iterates hug the ridge: the last recorded values sit near f* = 1.
  double tail = 0.0;
  for (std::size_t i = t.rounds.size() - 100; i < t.rounds.size(); ++i) tail += t.rounds[i].value;
  tail /= 100.0;
  CHECK(tail < 1.15);
  // Round 1 pays for the starting point: f(0) - f* = 0.2.
  CHECK(t.rounds.front().cum_regret == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("estimator diagnostics separate bounded from unbounded probes") {
  ConvexTestbed bed = ridge_bed();
  std::vector<double> point{0.25, 0.1};
  std::vector<double> gammas{1e-4, 0.01};
  std::vector<EstimatorDiagnostics> diags =
      estimator_diagnostics(bed, point, gammas, 2000, RandomSource(5, 0));
  REQUIRE(diags.size() == 2);
  for (const EstimatorDiagnostics& d : diags) {
    CHECK(d.norm_bound == doctest::Approx(2.0));  // N * Lipschitz
    CHECK(d.tpge_max_norm <= d.norm_bound * (1.0 + 1e-9));
    CHECK(d.tpge_mean_max_err <= d.tpge_err_limit);
  }
  // The one-point probe at the small radius dwarfs the bound; two-point stays put.
  CHECK(diags[0].gamma == doctest::Approx(1e-4));
  CHECK(diags[0].opge_max_norm > 10.0 * diags[0].tpge_max_norm);
  CHECK(diags[0].opge_max_norm > diags[0].norm_bound);
  CHECK_THROWS(estimator_diagnostics(bed, point, gammas, 100, RandomSource(5, 0)));
  std::vector<double> outside{5.0, 0.0};
  CHECK_THROWS(estimator_diagnostics(bed, outside, gammas, 2000, RandomSource(5, 0)));
}

TEST_CASE("log-log slope fits recover exact power laws") {
  std::vector<double> t{100.0, 1000.0, 10000.0};
  std::vector<double> sqrt_law{10.0, std::sqrt(1000.0), 100.0};
  CHECK(fit_loglog_slope(t, sqrt_law) == doctest::Approx(0.5).epsilon(1e-12));
  std::vector<double> linear_law{100.0, 1000.0, 10000.0};
  CHECK(fit_loglog_slope(t, linear_law) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> one{100.0};
  CHECK_THROWS(fit_loglog_slope(one, one));
  std::vector<double> zeros{0.0, 1.0, 2.0};
  CHECK_THROWS(fit_loglog_slope(t, zeros));
}

TEST_CASE("the csv report carries one row per horizon plus diagnostics") {
  ConvexTestbed bed = ConvexTestbed::quadratic({0.5, -0.3}, 1.0);
  std::vector<double> t{100.0, 1000.0};
  std::vector<double> r{2.0, 6.3};
  std::vector<double> gammas{0.01};
  std::vector<EstimatorDiagnostics> diags =
      estimator_diagnostics(bed, std::vector<double>{0.1, 0.1}, gammas, 1000, RandomSource(1, 0));
  std::string csv = regret_report_csv(t, r, 0.5, diags);
  CHECK(csv.find("kind") != std::string::npos);
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines >= 4);  // header + two horizons + one diagnostic row
}
