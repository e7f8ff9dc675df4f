#include "crseg/oracle.hpp"

#include "crseg/projections.hpp"

namespace crseg {

namespace {

class CountingOracle : public BlackBoxOracle {
 public:
  CountingOracle(BlackBoxOracle& base, std::optional<std::uint64_t> limit) : base_(base), counter_(limit) {}

  ProbMap predict(const ImageTensor& x) override {
    counter_.charge();  // throws before the base oracle sees the query
    return base_.predict(x);
  }

  QueryCounter& queries() override { return counter_; }

 private:
  BlackBoxOracle& base_;
  QueryCounter counter_;
};

}  // namespace

std::unique_ptr<BlackBoxOracle> with_counter(BlackBoxOracle& base, std::optional<std::uint64_t> limit) {
  return std::make_unique<CountingOracle>(base, limit);
}

double attack_loss(BlackBoxOracle& oracle, const ImageTensor& x, std::span<const double> delta,
                   const LabelMap& truth, const WeightMap* weights) {
  ProbMap probs = oracle.predict(clip_image(x, delta));
  if (weights) return cr_weighted_loss(probs, truth, *weights);
  return mean_cross_entropy(probs, truth);
}

}  // namespace crseg
