#pragma once

#include <cstdint>
#include <vector>

namespace crseg {

// Counter-based generator (splitmix64 finalizer over key + counter). Streams are
// keyed by (seed, stream id), so split() hands out statistically independent
// children without touching the parent. Output is identical on every platform
// and does not depend on how work is scheduled across threads.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0);

  // Child stream derived from this stream's identity; parent state is unchanged.
  RandomSource split(std::uint64_t child) const;

  std::uint64_t next_u64();
  std::uint64_t next_below(std::uint64_t n);  // uniform in [0, n), n > 0
  double next_unit();                         // uniform [0,1)
  double next_gaussian();                     // standard normal, Box-Muller

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// n independent N(0, sigma^2) draws. Throws on n == 0 or sigma < 0.
std::vector<double> gaussian_sample(RandomSource& rng, std::size_t n, double sigma);

}  // namespace crseg
