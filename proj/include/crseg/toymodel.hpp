#pragma once

#include <filesystem>
#include <vector>

#include "crseg/oracle.hpp"
#include "crseg/random.hpp"
#include "crseg/smoothing.hpp"
#include "crseg/tensor.hpp"

namespace crseg {

struct Sample {
  ImageTensor image;
  LabelMap labels;
};
using Dataset = std::vector<Sample>;

struct SynthDatasetSpec {
  int count = 64;
  int height = 32;
  int width = 32;
  int num_classes = 4;
  double texture_noise = 0.08;
  std::uint64_t seed = 0;
};

// Shapes on a background: each image gets 1-3 non-overlapping colored shapes
// (axis-aligned rectangles and disks) over a uniform background, plus Gaussian
// texture noise clamped to [0,1]. Labels are the exact shape masks; class 0 is
// the background. A shape that cannot be placed after bounded retries is
// skipped; the first shape of an image always places. Requires H, W >= 16.
// The palette is deliberately low contrast relative to the default noise so a
// patch classifier must average its whole window, which keeps the trained
// model sensitive to small perturbation budgets.
Dataset gen_synthetic_dataset(const SynthDatasetSpec& spec);

struct ToyModelConfig {
  int patch_radius = 2;
  int hidden = 32;
  int num_classes = 4;
  int channels = 3;

  int window() const {
    int s = 2 * patch_radius + 1;
    return s * s * channels;
  }
};

// Per-pixel patch classifier: each pixel is labeled from its (2k+1)^2 x C
// neighborhood (replicate padding at borders) by a one-hidden-layer ReLU net
// with a softmax head. All parameters are doubles.
class ToySegModel {
 public:
  ToySegModel(const ToyModelConfig& cfg, RandomSource& rng);  // He-initialized

  const ToyModelConfig& config() const { return cfg_; }

  ProbMap forward(const ImageTensor& x) const;
  double loss(const ImageTensor& x, const LabelMap& truth, const WeightMap* weights = nullptr) const;
  InputGradient input_gradient(const ImageTensor& x, const LabelMap& truth,
                               const WeightMap* weights = nullptr) const;

  // One SGD step on the (weighted) mean cross entropy of a single image.
  // Returns the pre-step loss.
  double train_step(const ImageTensor& x, const LabelMap& truth, double lr,
                    const WeightMap* weights = nullptr);

  // Checkpoint directory: w1/b1/w2/b2 tensors plus a plain-text model.meta.
  // Values are stored as float32, so parameters are quantized on first save;
  // save -> load -> save reproduces files byte for byte.
  void save(const std::filesystem::path& dir) const;
  static ToySegModel load(const std::filesystem::path& dir);

  std::vector<double>& params(int which);  // 0..3 = w1, b1, w2, b2

 private:
  ToySegModel() = default;

  ToyModelConfig cfg_;
  std::vector<double> w1_;  // hidden x window, row-major
  std::vector<double> b1_;  // hidden
  std::vector<double> w2_;  // classes x hidden, row-major
  std::vector<double> b2_;  // classes
};

struct TrainConfig {
  int epochs = 300;
  double lr = 0.25;
};

struct TrainStats {
  std::vector<double> epoch_loss;  // mean per-image loss, recorded pre-step
};

TrainStats train_model(ToySegModel& model, const Dataset& data, const TrainConfig& cfg, RandomSource& rng);

// Single-step adversarial training: random uniform start in [-eps, eps]^N, one
// signed-gradient step of size alpha clipped to the linf ball, then an SGD
// parameter step on the adversarial image. With cr_guided the single step is
// replaced by an `inner_steps`-step robustness-weighted sign ascent whose
// weight map is estimated once per image visit.
struct FastAdtConfig {
  double eps = 0.015;
  double alpha = 0.01875;
  int epochs = 300;
  double lr = 0.10;
  bool cr_guided = false;
  int inner_steps = 5;
  SmoothingConfig smoothing;
};

TrainStats fast_adt(ToySegModel& model, const Dataset& data, const FastAdtConfig& cfg, RandomSource& rng);

// Query-metered adapter. predict() charges the counter; the white-box calls
// (forward / loss_gradient) never do.
class ToyModelOracle : public WhiteBoxOracle {
 public:
  explicit ToyModelOracle(const ToySegModel& model, std::optional<std::uint64_t> limit = std::nullopt)
      : model_(model), counter_(limit) {}

  ProbMap predict(const ImageTensor& x) override {
    counter_.charge();
    return model_.forward(x);
  }
  ProbMap forward(const ImageTensor& x) override { return model_.forward(x); }
  InputGradient loss_gradient(const ImageTensor& x, const LabelMap& truth,
                              const WeightMap* weights = nullptr) override {
    return model_.input_gradient(x, truth, weights);
  }
  QueryCounter& queries() override { return counter_; }

 private:
  const ToySegModel& model_;
  QueryCounter counter_;
};

}  // namespace crseg
