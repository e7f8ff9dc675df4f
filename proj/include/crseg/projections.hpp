#pragma once

#include <span>
#include <vector>

#include "crseg/random.hpp"
#include "crseg/tensor.hpp"

namespace crseg {

// Euclidean projection onto the centered lp ball of radius eps. Exact minimizers:
// feasible points come back unchanged, so projections are idempotent. eps must be > 0.
std::vector<double> project_linf(std::span<const double> v, double eps);
std::vector<double> project_l2(std::span<const double> v, double eps);
std::vector<double> project_l1(std::span<const double> v, double eps);
std::vector<double> project(std::span<const double> v, NormKind p, double eps);

// Uniform direction / point for the probe-based estimators.
std::vector<double> sample_unit_sphere_l2(RandomSource& rng, std::size_t n);
std::vector<double> sample_unit_ball_l2(RandomSource& rng, std::size_t n);

// x + delta clamped back into the valid image box [0,1].
ImageTensor clip_image(const ImageTensor& x, std::span<const double> delta);
ImageTensor clip_image(const ImageTensor& x, std::span<const float> delta);

}  // namespace crseg
