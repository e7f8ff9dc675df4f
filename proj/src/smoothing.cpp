#include "crseg/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crseg/projections.hpp"

namespace crseg {

namespace {

constexpr double kProbClamp = 1e-6;
constexpr double kLogClamp = 1e-12;

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

void check_pair(const ProbMap& probs, const LabelMap& truth) {
  if (probs.height != truth.height || probs.width != truth.width)
    throw std::invalid_argument("prob map and label map shapes differ");
  truth.validate(probs.num_classes);
}

}  // namespace

// Wichura's PPND16 rational approximation (Applied Statistics 37, alg. AS 241).
double inv_norm_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("inv_norm_cdf requires p in (0,1)");

  static const double a[8] = {3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
                              1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
                              3.3430575583588128105e4, 2.5090809287301226727e3};
  static const double b[8] = {1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
                              2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
                              5.2264952788528545610e3};
  static const double c[8] = {1.42343711074968357734e0,  4.63033784615654529590e0,  5.76949722146069140550e0,
                              3.64784832476320460504e0,  1.27045825245236838258e0,  2.41780725177450611770e-1,
                              2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static const double d[8] = {1.0,
                              2.05319162663775882187e0,
                              1.67638483018380384940e0,
                              6.89767334985100004550e-1,
                              1.48103976427480074590e-1,
                              1.51986665636164571966e-2,
                              5.47593808499534494600e-4,
                              1.05075007164441684324e-9};
  static const double e[8] = {6.65790464350110377720e0,  5.46378491116411436990e0,  1.78482653991729133580e0,
                              2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                              2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static const double f[8] = {1.0,
                              5.99832206555887937690e-1,
                              1.36929880922735805310e-1,
                              1.48753612908506148525e-2,
                              7.86869131145613259100e-4,
                              1.84631831751005468180e-5,
                              1.42151175831644588870e-7};

  auto ratio = [](const double* num, const double* den, double r) {
    double n = num[7];
    for (int i = 6; i >= 0; --i) n = n * r + num[i];
    double m = den[7];
    for (int i = 6; i >= 0; --i) m = m * r + den[i];
    return n / m;
  };

  double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    return q * ratio(a, b, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0)
    val = ratio(c, d, r - 1.6);
  else
    val = ratio(e, f, r - 5.0);
  return q < 0.0 ? -val : val;
}

ProbMap smoothed_probs(const PredictFn& predict, const ImageTensor& x, const SmoothingConfig& cfg,
                       const RandomSource& rng) {
  if (cfg.samples < 1) throw std::invalid_argument("smoothing needs at least one sample");
  if (cfg.sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");

  std::vector<double> acc;
  ProbMap shape;
  for (int j = 0; j < cfg.samples; ++j) {
    RandomSource noise_rng = rng.split(static_cast<std::uint64_t>(j));
    std::vector<double> noise = gaussian_sample(noise_rng, x.data.size(), cfg.sigma);
    ProbMap p = predict(clip_image(x, std::span<const double>(noise)));
    if (acc.empty()) {
      acc.assign(p.data.size(), 0.0);
      shape = p;
    } else if (p.data.size() != acc.size() || p.num_classes != shape.num_classes) {
      throw std::runtime_error("predict returned inconsistent shapes across noise samples");
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += p.data[i];
  }
  ProbMap out = shape;
  double inv = 1.0 / static_cast<double>(cfg.samples);
  for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i] * inv);
  return out;
}

CertifiedRadiusMap pixel_certified_radius(const ProbMap& probs, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  CertifiedRadiusMap out;
  out.height = probs.height;
  out.width = probs.width;
  std::size_t pixels = static_cast<std::size_t>(probs.height) * probs.width;
  out.radii.resize(pixels);
  for (std::size_t n = 0; n < pixels; ++n) {
    auto row = probs.pixel(n);
    double pmax = 0.0;
    for (float v : row) pmax = std::max(pmax, static_cast<double>(v));
    out.radii[n] = sigma * inv_norm_cdf(clamp_prob(pmax));
  }
  return out;
}

double classification_certified_radius(double p_a, double p_b, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
  return 0.5 * sigma * (inv_norm_cdf(clamp_prob(p_a)) - inv_norm_cdf(clamp_prob(p_b)));
}

WeightMap pixel_weights(const CertifiedRadiusMap& radii, double a, double b) {
  WeightMap out;
  out.height = radii.height;
  out.width = radii.width;
  out.weights.resize(radii.radii.size());
  for (std::size_t i = 0; i < radii.radii.size(); ++i)
    out.weights[i] = 1.0 / (1.0 + std::exp(a * radii.radii[i] + b));
  return out;
}

double cr_weighted_loss(const ProbMap& probs, const LabelMap& truth, const WeightMap& weights) {
  check_pair(probs, truth);
  if (weights.weights.size() != truth.labels.size())
    throw std::invalid_argument("weight map shape does not match labels");
  double acc = 0.0;
  for (std::size_t n = 0; n < truth.labels.size(); ++n) {
    double p = probs.pixel(n)[truth.labels[n]];
    acc += weights.weights[n] * -std::log(std::max(p, kLogClamp));
  }
  return acc / static_cast<double>(truth.labels.size());
}

double mean_cross_entropy(const ProbMap& probs, const LabelMap& truth) {
  check_pair(probs, truth);
  double acc = 0.0;
  for (std::size_t n = 0; n < truth.labels.size(); ++n) {
    double p = probs.pixel(n)[truth.labels[n]];
    acc += -std::log(std::max(p, kLogClamp));
  }
  return acc / static_cast<double>(truth.labels.size());
}

}  // namespace crseg
