#include "crseg/projections.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace crseg {

namespace {

// Feasibility slack: points already inside the ball (up to rounding) pass through
// untouched, which keeps repeated projection bit-stable.
constexpr double kBallSlack = 1e-12;

void check_args(std::span<const double> v, double eps) {
  if (v.empty()) throw std::invalid_argument("projection of empty vector");
  if (!(eps > 0.0)) throw std::invalid_argument("projection radius must be positive");
}

}  // namespace

std::vector<double> project_linf(std::span<const double> v, double eps) {
  check_args(v, eps);
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x = std::clamp(x, -eps, eps);
  return out;
}

std::vector<double> project_l2(std::span<const double> v, double eps) {
  check_args(v, eps);
  double n = lp_norm(v, NormKind::L2);
  std::vector<double> out(v.begin(), v.end());
  if (n <= eps * (1.0 + kBallSlack)) return out;
  double scale = eps / n;
  for (double& x : out) x *= scale;
  return out;
}

std::vector<double> project_l1(std::span<const double> v, double eps) {
  check_args(v, eps);
  std::vector<double> out(v.begin(), v.end());
  double n = lp_norm(v, NormKind::L1);
  if (n <= eps * (1.0 + kBallSlack)) return out;

  // Soft-threshold at tau chosen so the shrunk magnitudes sum to eps
  // (sort-based simplex projection applied to |v|).
  std::vector<double> mag(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) mag[i] = std::abs(v[i]);
  std::sort(mag.begin(), mag.end(), std::greater<>());

  double cum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < mag.size(); ++j) {
    cum += mag[j];
    double t = (cum - eps) / static_cast<double>(j + 1);
    if (mag[j] - t > 0.0)
      tau = t;
    else
      break;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    double m = std::abs(out[i]) - tau;
    out[i] = m > 0.0 ? std::copysign(m, out[i]) : 0.0;
  }
  return out;
}

std::vector<double> project(std::span<const double> v, NormKind p, double eps) {
  switch (p) {
    case NormKind::L1: return project_l1(v, eps);
    case NormKind::L2: return project_l2(v, eps);
    case NormKind::Linf: return project_linf(v, eps);
  }
  throw std::logic_error("bad NormKind");
}

std::vector<double> sample_unit_sphere_l2(RandomSource& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("sphere sample of dimension 0");
  std::vector<double> u(n);
  double norm = 0.0;
  do {
    for (double& x : u) x = rng.next_gaussian();
    norm = lp_norm(std::span<const double>(u), NormKind::L2);
  } while (norm == 0.0);
  for (double& x : u) x /= norm;
  return u;
}

std::vector<double> sample_unit_ball_l2(RandomSource& rng, std::size_t n) {
  std::vector<double> u = sample_unit_sphere_l2(rng, n);
  double r = std::pow(rng.next_unit(), 1.0 / static_cast<double>(n));
  for (double& x : u) x *= r;
  return u;
}

namespace {

template <typename T>
ImageTensor clip_impl(const ImageTensor& x, std::span<const T> delta) {
  if (delta.size() != x.data.size()) throw std::invalid_argument("perturbation length does not match image");
  ImageTensor out = x;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    double v = static_cast<double>(x.data[i]) + static_cast<double>(delta[i]);
    out.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return out;
}

}  // namespace

ImageTensor clip_image(const ImageTensor& x, std::span<const double> delta) { return clip_impl(x, delta); }
ImageTensor clip_image(const ImageTensor& x, std::span<const float> delta) { return clip_impl(x, delta); }

}  // namespace crseg
