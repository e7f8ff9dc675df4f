#include "crseg/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace crseg {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  key_ = mix64(mix64(seed + kGolden) ^ mix64(stream + 0x6A09E667F3BCC909ull));
}

RandomSource RandomSource::split(std::uint64_t child) const {
  return RandomSource(seed_, mix64(stream_ + kGolden) ^ mix64(child + 0x3C6EF372FE94F82Bull));
}

std::uint64_t RandomSource::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

std::uint64_t RandomSource::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  // Lemire's multiply-shift; bias is at most n / 2^64, irrelevant at our scales.
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double RandomSource::next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RandomSource::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = next_unit();
  double u2 = next_unit();
  // Guard against log(0); smallest representable u1 after the shift is 0.
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::vector<double> gaussian_sample(RandomSource& rng, std::size_t n, double sigma) {
  if (n == 0) throw std::invalid_argument("gaussian_sample: n must be positive");
  if (sigma < 0.0) throw std::invalid_argument("gaussian_sample: sigma must be non-negative");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = sigma * rng.next_gaussian();
  return out;
}

}  // namespace crseg
