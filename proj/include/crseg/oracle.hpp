#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>

#include "crseg/smoothing.hpp"
#include "crseg/tensor.hpp"

namespace crseg {

struct QueryBudgetExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thread-safe tally of model queries. With a limit set, the charge that would
// push the count past the limit throws before the model is touched.
class QueryCounter {
 public:
  explicit QueryCounter(std::optional<std::uint64_t> limit = std::nullopt) : limit_(limit) {}

  void charge() {
    std::uint64_t cur = count_.load(std::memory_order_relaxed);
    for (;;) {
      if (limit_ && cur + 1 > *limit_) throw QueryBudgetExhausted("query budget exhausted");
      if (count_.compare_exchange_weak(cur, cur + 1, std::memory_order_relaxed)) return;
    }
  }

  std::uint64_t count() const { return count_.load(std::memory_order_relaxed); }
  std::optional<std::uint64_t> limit() const { return limit_; }
  void reset() { count_.store(0, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> count_{0};
  std::optional<std::uint64_t> limit_;
};

// Query-metered view of a classifier: one predict equals one counted query.
class BlackBoxOracle {
 public:
  virtual ~BlackBoxOracle() = default;
  virtual ProbMap predict(const ImageTensor& x) = 0;
  virtual QueryCounter& queries() = 0;
};

struct InputGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // d loss / d input, flat H*W*C
};

// Adds white-box privileges: analytic input gradients and unmetered forward
// passes. Neither touches the black-box query count.
class WhiteBoxOracle : public BlackBoxOracle {
 public:
  virtual InputGradient loss_gradient(const ImageTensor& x, const LabelMap& truth,
                                      const WeightMap* weights = nullptr) = 0;
  virtual ProbMap forward(const ImageTensor& x) = 0;
};

// Non-owning wrapper that re-counts queries against its own (optionally capped)
// counter in addition to the base oracle's.
std::unique_ptr<BlackBoxOracle> with_counter(BlackBoxOracle& base, std::optional<std::uint64_t> limit);

// Scalar objective the black-box attacks maximize: (weighted) cross entropy of
// the model at clip(x + delta). Costs exactly one query.
double attack_loss(BlackBoxOracle& oracle, const ImageTensor& x, std::span<const double> delta,
                   const LabelMap& truth, const WeightMap* weights = nullptr);

}  // namespace crseg
