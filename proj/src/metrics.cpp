#include "crseg/metrics.hpp"

#include <stdexcept>
#include <vector>

namespace crseg {

namespace {

void check_batch(std::span<const LabelMap> pred, std::span<const LabelMap> truth) {
  if (pred.empty() || pred.size() != truth.size())
    throw std::invalid_argument("prediction / ground-truth batch size mismatch");
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i].height != truth[i].height || pred[i].width != truth[i].width)
      throw std::invalid_argument("prediction / ground-truth shape mismatch");
}

}  // namespace

LabelMap argmax_labels(const ProbMap& probs) {
  LabelMap out(probs.height, probs.width);
  std::size_t pixels = static_cast<std::size_t>(probs.height) * probs.width;
  for (std::size_t n = 0; n < pixels; ++n) {
    auto row = probs.pixel(n);
    int best = 0;
    for (int k = 1; k < probs.num_classes; ++k)
      if (row[k] > row[best]) best = k;
    out.labels[n] = best;
  }
  return out;
}

double pix_acc(std::span<const LabelMap> pred, std::span<const LabelMap> truth) {
  check_batch(pred, truth);
  std::uint64_t hit = 0, total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t n = 0; n < pred[i].labels.size(); ++n)
      hit += pred[i].labels[n] == truth[i].labels[n];
    total += pred[i].labels.size();
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

double miou(std::span<const LabelMap> pred, std::span<const LabelMap> truth, int num_classes) {
  check_batch(pred, truth);
  if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
  double iou_sum = 0.0;
  std::uint64_t pairs = 0;
  std::vector<std::uint64_t> inter(num_classes), uni(num_classes);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i].validate(num_classes);
    truth[i].validate(num_classes);
    std::fill(inter.begin(), inter.end(), 0);
    std::fill(uni.begin(), uni.end(), 0);
    for (std::size_t n = 0; n < pred[i].labels.size(); ++n) {
      int p = pred[i].labels[n];
      int t = truth[i].labels[n];
      if (p == t) {
        ++inter[p];
        ++uni[p];
      } else {
        ++uni[p];
        ++uni[t];
      }
    }
    for (int k = 0; k < num_classes; ++k) {
      if (uni[k] == 0) continue;
      iou_sum += static_cast<double>(inter[k]) / static_cast<double>(uni[k]);
      ++pairs;
    }
  }
  return pairs ? iou_sum / static_cast<double>(pairs) : 0.0;
}

}  // namespace crseg
