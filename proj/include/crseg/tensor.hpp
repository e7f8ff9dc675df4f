#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crseg {

enum class NormKind { L1, L2, Linf };

NormKind parse_norm(const std::string& s);        // "l1" | "l2" | "linf"
std::string norm_name(NormKind p);

// Row-major H x W x C image, values expected in [0,1].
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c, float fill = 0.0f);

  std::size_t size() const { return data.size(); }
  int pixel_count() const { return height * width; }
  float& at(int r, int c, int ch) { return data[(static_cast<std::size_t>(r) * width + c) * channels + ch]; }
  float at(int r, int c, int ch) const { return data[(static_cast<std::size_t>(r) * width + c) * channels + ch]; }

  // Throws std::invalid_argument if shape/data mismatch or any value outside [0,1].
  void validate() const;
};

// Per-pixel class distribution, row-major H x W x K. Rows must sum to 1 within 1e-5.
struct ProbMap {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<float> data;

  ProbMap() = default;
  ProbMap(int h, int w, int k);

  float& at(int r, int c, int k) { return data[(static_cast<std::size_t>(r) * width + c) * num_classes + k]; }
  float at(int r, int c, int k) const { return data[(static_cast<std::size_t>(r) * width + c) * num_classes + k]; }
  std::span<const float> pixel(std::size_t n) const {
    return {data.data() + n * num_classes, static_cast<std::size_t>(num_classes)};
  }

  void validate() const;
};

// Per-pixel integer labels.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> labels;

  LabelMap() = default;
  LabelMap(int h, int w, int fill = 0);

  int& at(int r, int c) { return labels[static_cast<std::size_t>(r) * width + c]; }
  int at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }

  // Throws if any label falls outside [0, num_classes).
  void validate(int num_classes) const;
};

// Flat additive perturbation over all H*W*C input coordinates.
struct Perturbation {
  std::vector<float> data;
  NormKind norm = NormKind::Linf;
  double budget = 0.0;

  // Throws if the stored norm exceeds budget * (1 + 1e-9).
  void validate() const;
};

// Norms accumulate in double. Throws std::invalid_argument on empty input.
double lp_norm(std::span<const float> v, NormKind p);
double lp_norm(std::span<const double> v, NormKind p);

// Quantize a double iterate to float32 storage. Rounding can push the stored
// norm a hair past the budget; that is repaired by a tiny uniform shrink, so
// the result always validates.
Perturbation make_perturbation(std::span<const double> delta, NormKind norm, double budget);

// --- binary tensor file format ---
// magic "FTZ1", u32 ndim, ndim u32 dims, row-major float32 payload. All little endian.

struct BadMagicError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TruncatedFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimOverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

void save_tensor(const std::filesystem::path& path, std::span<const std::uint32_t> dims,
                 std::span<const float> data);
RawTensor load_tensor(const std::filesystem::path& path);

void save_image(const std::filesystem::path& path, const ImageTensor& img);
ImageTensor load_image(const std::filesystem::path& path);

// Labels travel as H x W x 1 float tensors holding exact small integers.
void save_labels(const std::filesystem::path& path, const LabelMap& labels);
LabelMap load_labels(const std::filesystem::path& path);

void save_perturbation(const std::filesystem::path& path, const Perturbation& delta);
Perturbation load_perturbation(const std::filesystem::path& path, NormKind norm, double budget);

// Plain-text PGM (P2) with labels scaled to the full gray range, for eyeballing masks.
void save_pgm(const std::filesystem::path& path, const LabelMap& labels, int num_classes);

}  // namespace crseg
