#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "crseg/random.hpp"
#include "crseg/smoothing.hpp"
#include "crseg/tensor.hpp"
#include "oracle_helpers.hpp"

using namespace crseg;

namespace {

ProbMap constant_map(float p0) {
  ProbMap m(1, 2, 2);
  for (int c = 0; c < 2; ++c) {
    m.at(0, c, 0) = p0;
    m.at(0, c, 1) = 1.0f - p0;
  }
  return m;
}

}  // namespace

TEST_CASE("inverse normal cdf agrees with the bisection oracle") {
  CHECK(inv_norm_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(inv_norm_cdf(0.841344746) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(inv_norm_cdf(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
  CHECK(inv_norm_cdf(0.158655254) == doctest::Approx(-1.0).epsilon(1e-6));

  double max_err = 0.0;
  for (int i = 1; i <= 999; ++i) {
    double p = i / 1000.0;
    max_err = std::max(max_err, std::abs(inv_norm_cdf(p) - testoracle::inv_norm_cdf_bisect(p)));
  }
  // Tails too, where rational approximations usually fall apart.
  for (double p : {1e-6, 1e-5, 1e-4, 1e-3, 1.0 - 1e-3, 1.0 - 1e-4, 1.0 - 1e-5, 1.0 - 1e-6})
    max_err = std::max(max_err, std::abs(inv_norm_cdf(p) - testoracle::inv_norm_cdf_bisect(p)));
  CHECK(max_err < 1e-9);

  CHECK_THROWS_AS(inv_norm_cdf(0.0), std::domain_error);
  CHECK_THROWS_AS(inv_norm_cdf(1.0), std::domain_error);
  CHECK_THROWS_AS(inv_norm_cdf(-0.1), std::domain_error);
}

TEST_CASE("smoothing a constant classifier returns its map and spends M queries") {
  testoracle::ConstantOracle oracle(constant_map(0.8f));
  ImageTensor x(1, 2, 1, 0.5f);
  SmoothingConfig cfg;
  cfg.sigma = 0.3;
  cfg.samples = 16;
  RandomSource rng(5, 0);
  ProbMap out = smoothed_probs([&](const ImageTensor& img) { return oracle.predict(img); }, x, cfg, rng);
  CHECK(oracle.queries().count() == 16);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    CHECK(out.data[i] == doctest::Approx(constant_map(0.8f).data[i]).epsilon(1e-6));
}

TEST_CASE("sigma zero reduces smoothing to one clean forward repeated") {
  std::vector<double> w0{2.0, 0.0, 0.0};
  std::vector<double> w1{0.0, 1.0, 1.0};
  testoracle::LinearLogitOracle oracle(w0, w1);
  ImageTensor x(1, 1, 3);
  x.data = {0.4f, 0.3f, 0.2f};
  SmoothingConfig cfg;
  cfg.sigma = 0.0;
  cfg.samples = 9;
  RandomSource rng(17, 0);
  ProbMap smoothed = smoothed_probs([&](const ImageTensor& img) { return oracle.predict(img); }, x, cfg, rng);
  ProbMap clean = oracle.eval(x);
  CHECK(oracle.queries().count() == 9);
  for (std::size_t i = 0; i < smoothed.data.size(); ++i)
    CHECK(smoothed.data[i] == doctest::Approx(clean.data[i]).epsilon(1e-6));
}

TEST_CASE("smoothed probabilities depend only on the rng identity") {
  std::vector<double> w0{1.5, -0.5, 0.0};
  std::vector<double> w1{-1.0, 1.0, 0.5};
  testoracle::LinearLogitOracle oracle(w0, w1);
  ImageTensor x(1, 1, 3, 0.5f);
  SmoothingConfig cfg;
  cfg.sigma = 0.25;
  cfg.samples = 32;
  ProbMap a = smoothed_probs([&](const ImageTensor& img) { return oracle.predict(img); }, x, cfg,
                             RandomSource(88, 3));
  ProbMap b = smoothed_probs([&](const ImageTensor& img) { return oracle.predict(img); }, x, cfg,
                             RandomSource(88, 3));
  CHECK(a.data == b.data);
  ProbMap c = smoothed_probs([&](const ImageTensor& img) { return oracle.predict(img); }, x, cfg,
                             RandomSource(88, 4));
  bool differs = false;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i] != c.data[i]) differs = true;
  CHECK(differs);
}

TEST_CASE("small-sample smoothing sits within Monte-Carlo error of a reference run") {
  std::vector<double> w0{3.0};
  std::vector<double> w1{-3.0};
  testoracle::LinearLogitOracle oracle(w0, w1);
  ImageTensor x(1, 1, 1, 0.5f);
  SmoothingConfig small;
  small.sigma = 0.2;
  small.samples = 10000;
  SmoothingConfig big = small;
  big.samples = 200000;
  auto fn = [&](const ImageTensor& img) { return oracle.predict(img); };
  ProbMap a = smoothed_probs(fn, x, small, RandomSource(1, 1));
  ProbMap b = smoothed_probs(fn, x, big, RandomSource(2, 2));
  // Bernoulli-style bound: 3 sigma of the smaller run.
  double se = 0.5 / std::sqrt(10000.0);
  CHECK(std::abs(a.data[0] - b.data[0]) < 3.0 * se);
}

TEST_CASE("smoothing argument validation") {
  testoracle::ConstantOracle oracle(constant_map(0.6f));
  ImageTensor x(1, 2, 1, 0.5f);
  auto fn = [&](const ImageTensor& img) { return oracle.predict(img); };
  SmoothingConfig cfg;
  cfg.samples = 0;
  CHECK_THROWS(smoothed_probs(fn, x, cfg, RandomSource(0, 0)));
  cfg.samples = 4;
  cfg.sigma = -0.1;
  CHECK_THROWS(smoothed_probs(fn, x, cfg, RandomSource(0, 0)));
}

TEST_CASE("pixel certified radius formula") {
  ProbMap p(1, 3, 2);
  p.at(0, 0, 0) = 0.5f;
  p.at(0, 0, 1) = 0.5f;
  p.at(0, 1, 0) = 0.841344746f;
  p.at(0, 1, 1) = 1.0f - 0.841344746f;
  p.at(0, 2, 0) = 0.1f;
  p.at(0, 2, 1) = 0.9f;

  CertifiedRadiusMap r1 = pixel_certified_radius(p, 1.0);
  CHECK(r1.radii[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r1.radii[1] == doctest::Approx(1.0).epsilon(1e-5));

  CertifiedRadiusMap rhalf = pixel_certified_radius(p, 0.5);
  CHECK(rhalf.radii[2] == doctest::Approx(0.6407758).epsilon(1e-5));

  CertifiedRadiusMap r0 = pixel_certified_radius(p, 0.001);
  CHECK(r0.radii[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("radius clamping keeps certificates finite at extreme votes") {
  ProbMap p(1, 2, 2);
  p.at(0, 0, 0) = 1.0f;
  p.at(0, 0, 1) = 0.0f;
  p.at(0, 1, 0) = 0.0f;
  p.at(0, 1, 1) = 1.0f;
  CertifiedRadiusMap r = pixel_certified_radius(p, 1.0);
  double cap = inv_norm_cdf(1.0 - 1e-6);
  CHECK(std::isfinite(r.radii[0]));
  CHECK(r.radii[0] == doctest::Approx(cap).epsilon(1e-9));
  CHECK(r.radii[1] == doctest::Approx(cap).epsilon(1e-9));
}

TEST_CASE("sub-majority votes yield negative radii with three classes") {
  ProbMap p(1, 1, 3);
  p.at(0, 0, 0) = 0.4f;
  p.at(0, 0, 1) = 0.3f;
  p.at(0, 0, 2) = 0.3f;
  CertifiedRadiusMap r = pixel_certified_radius(p, 1.0);
  CHECK(r.radii[0] < 0.0);
}

TEST_CASE("two-class certificate identities") {
  CHECK(classification_certified_radius(0.5, 0.5, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(classification_certified_radius(0.841344746, 0.158655254, 1.0) == doctest::Approx(1.0).epsilon(1e-5));
  // With pB = 1 - pA this collapses to sigma * quantile(pA).
  double pa = 0.9;
  CHECK(classification_certified_radius(pa, 1.0 - pa, 0.5) ==
        doctest::Approx(0.5 * inv_norm_cdf(pa)).epsilon(1e-9));
  // Scales linearly in sigma.
  CHECK(classification_certified_radius(0.8, 0.1, 2.0) ==
        doctest::Approx(2.0 * classification_certified_radius(0.8, 0.1, 1.0)).epsilon(1e-9));
}

TEST_CASE("robustness weights follow the logistic form") {
  CertifiedRadiusMap r;
  r.height = 1;
  r.width = 3;
  r.radii = {2.0, 0.0, 5.0};
  WeightMap w = pixel_weights(r, 2.0, -4.0);
  CHECK(w.weights[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(w.weights[1] == doctest::Approx(0.9820138).epsilon(1e-6));
  CHECK(w.weights[2] == doctest::Approx(1.0 / (1.0 + std::exp(6.0))).epsilon(1e-9));
  for (double v : w.weights) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  // Larger certified radius never raises the weight when a > 0.
  CHECK(w.weights[2] < w.weights[0]);
  CHECK(w.weights[0] < w.weights[1]);
}

TEST_CASE("weighted loss matches the two-pixel hand computation") {
  ProbMap p(1, 2, 2);
  float p0 = std::exp(-0.7f);
  float p1 = std::exp(-9.9f);
  p.at(0, 0, 0) = p0;
  p.at(0, 0, 1) = 1.0f - p0;
  p.at(0, 1, 0) = p1;
  p.at(0, 1, 1) = 1.0f - p1;
  LabelMap y(1, 2, 0);  // both pixels labeled class 0

  WeightMap w;
  w.height = 1;
  w.width = 2;
  w.weights = {1.0, 0.0};
  CHECK(cr_weighted_loss(p, y, w) == doctest::Approx(0.35).epsilon(1e-5));

  w.weights = {1.0, 1.0};
  CHECK(cr_weighted_loss(p, y, w) == doctest::Approx(mean_cross_entropy(p, y)).epsilon(1e-12));
  CHECK(mean_cross_entropy(p, y) == doctest::Approx((0.7 + 9.9) / 2.0).epsilon(1e-4));

  w.weights = {0.0, 0.0};
  CHECK(cr_weighted_loss(p, y, w) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cross entropy clamps the log argument") {
  ProbMap p(1, 1, 2);
  p.at(0, 0, 0) = 0.0f;
  p.at(0, 0, 1) = 1.0f;
  LabelMap y(1, 1, 0);
  double ce = mean_cross_entropy(p, y);
  CHECK(std::isfinite(ce));
  CHECK(ce == doctest::Approx(-std::log(1e-12)).epsilon(1e-9));
}

TEST_CASE("loss helpers reject mismatched shapes") {
  ProbMap p(2, 2, 3);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      p.at(r, c, 0) = 1.0f;
      p.at(r, c, 1) = 0.0f;
      p.at(r, c, 2) = 0.0f;
    }
  LabelMap wrong(2, 3, 0);
  CHECK_THROWS(mean_cross_entropy(p, wrong));
  LabelMap y(2, 2, 0);
  WeightMap w;
  w.height = 1;
  w.width = 2;
  w.weights = {1.0, 1.0};
  CHECK_THROWS(cr_weighted_loss(p, y, w));
  LabelMap bad(2, 2, 5);  // label out of range
  CHECK_THROWS(mean_cross_entropy(p, bad));
}
