#pragma once

#include <functional>
#include <span>
#include <vector>

#include "crseg/random.hpp"
#include "crseg/tensor.hpp"

namespace crseg {

// Monte-Carlo smoothing settings. `samples` is the number of noisy forward
// passes per estimate; `recompute_interval` is how many attack iterations a
// weight map stays fresh before it is re-estimated.
struct SmoothingConfig {
  double sigma = 0.001;
  int samples = 8;
  double weight_a = 2.0;
  double weight_b = -4.0;
  int recompute_interval = 8;
};

struct CertifiedRadiusMap {
  int height = 0;
  int width = 0;
  std::vector<double> radii;  // per pixel; negative when the smoothed vote is < 1/2
};

struct WeightMap {
  int height = 0;
  int width = 0;
  std::vector<double> weights;  // per pixel, each in (0,1)
};

// Inverse standard normal CDF on (0,1), |err| < 1e-9 across the domain.
// Throws std::domain_error outside the open interval.
double inv_norm_cdf(double p);

using PredictFn = std::function<ProbMap(const ImageTensor&)>;

// Empirical mean of predict over `samples` Gaussian-noised copies of x. Each
// noisy copy is clamped back into [0,1] before the query. Noise for sample j
// comes from rng.split(j), so the result only depends on the rng identity.
ProbMap smoothed_probs(const PredictFn& predict, const ImageTensor& x, const SmoothingConfig& cfg,
                       const RandomSource& rng);

// Per-pixel certified radius sigma * Phi^-1(max_c p_c). Probabilities are
// clamped to [1e-6, 1 - 1e-6] first so the quantile stays finite.
CertifiedRadiusMap pixel_certified_radius(const ProbMap& probs, double sigma);

// Two-class certificate (sigma / 2) * (Phi^-1(pA) - Phi^-1(pB)), same clamping.
double classification_certified_radius(double p_a, double p_b, double sigma);

// Logistic robustness weight w = 1 / (1 + exp(a * radius + b)): large certified
// radius means a hard pixel, so it gets a small weight.
WeightMap pixel_weights(const CertifiedRadiusMap& radii, double a, double b);

// Mean over pixels of w_n * CE(probs_n, y_n), log clamped at 1e-12.
double cr_weighted_loss(const ProbMap& probs, const LabelMap& truth, const WeightMap& weights);

// Plain per-pixel cross entropy (all weights 1).
double mean_cross_entropy(const ProbMap& probs, const LabelMap& truth);

}  // namespace crseg
