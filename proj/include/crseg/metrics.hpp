#pragma once

#include <span>

#include "crseg/tensor.hpp"

namespace crseg {

// Hard labels by per-pixel argmax; ties go to the lowest class index.
LabelMap argmax_labels(const ProbMap& probs);

// Fraction of pixels labeled correctly over the whole batch.
double pix_acc(std::span<const LabelMap> pred, std::span<const LabelMap> truth);

// Mean IoU over (image, class) pairs. A class absent from both prediction and
// ground truth in an image contributes nothing (skipped, not counted as 1).
double miou(std::span<const LabelMap> pred, std::span<const LabelMap> truth, int num_classes);

}  // namespace crseg
