#include "crseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace crseg {

namespace {

constexpr char kMagic[4] = {'F', 'T', 'Z', '1'};
constexpr std::uint32_t kMaxDims = 8;
constexpr std::uint64_t kMaxElements = 1ull << 31;

void check_shape(int h, int w, int c) {
  if (h <= 0 || w <= 0 || c <= 0) throw std::invalid_argument("tensor dimensions must be positive");
}

}  // namespace

NormKind parse_norm(const std::string& s) {
  if (s == "l1") return NormKind::L1;
  if (s == "l2") return NormKind::L2;
  if (s == "linf") return NormKind::Linf;
  throw std::invalid_argument("unknown norm '" + s + "' (expected l1, l2 or linf)");
}

std::string norm_name(NormKind p) {
  switch (p) {
    case NormKind::L1: return "l1";
    case NormKind::L2: return "l2";
    case NormKind::Linf: return "linf";
  }
  throw std::logic_error("bad NormKind");
}

ImageTensor::ImageTensor(int h, int w, int c, float fill) : height(h), width(w), channels(c) {
  check_shape(h, w, c);
  data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

void ImageTensor::validate() const {
  check_shape(height, width, channels);
  if (data.size() != static_cast<std::size_t>(height) * width * channels)
    throw std::invalid_argument("image data length does not match shape");
  for (float v : data)
    if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("image value outside [0,1]");
}

ProbMap::ProbMap(int h, int w, int k) : height(h), width(w), num_classes(k) {
  check_shape(h, w, k);
  data.assign(static_cast<std::size_t>(h) * w * k, 0.0f);
}

void ProbMap::validate() const {
  check_shape(height, width, num_classes);
  if (data.size() != static_cast<std::size_t>(height) * width * num_classes)
    throw std::invalid_argument("prob map data length does not match shape");
  const std::size_t pixels = static_cast<std::size_t>(height) * width;
  for (std::size_t n = 0; n < pixels; ++n) {
    double sum = 0.0;
    for (int k = 0; k < num_classes; ++k) {
      float v = data[n * num_classes + k];
      if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("probability outside [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-5) throw std::invalid_argument("pixel distribution does not sum to 1");
  }
}

LabelMap::LabelMap(int h, int w, int fill) : height(h), width(w) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("label map dimensions must be positive");
  labels.assign(static_cast<std::size_t>(h) * w, fill);
}

void LabelMap::validate(int num_classes) const {
  if (height <= 0 || width <= 0) throw std::invalid_argument("label map dimensions must be positive");
  if (labels.size() != static_cast<std::size_t>(height) * width)
    throw std::invalid_argument("label data length does not match shape");
  for (int v : labels)
    if (v < 0 || v >= num_classes) throw std::invalid_argument("label outside [0, numClasses)");
}

void Perturbation::validate() const {
  if (data.empty()) throw std::invalid_argument("empty perturbation");
  double n = lp_norm(std::span<const float>(data), norm);
  if (n > budget * (1.0 + 1e-9)) throw std::invalid_argument("perturbation exceeds norm budget");
}

namespace {

template <typename T>
double lp_norm_impl(std::span<const T> v, NormKind p) {
  if (v.empty()) throw std::invalid_argument("lp_norm of empty vector");
  double acc = 0.0;
  switch (p) {
    case NormKind::L1:
      for (T x : v) acc += std::abs(static_cast<double>(x));
      return acc;
    case NormKind::L2:
      for (T x : v) acc += static_cast<double>(x) * static_cast<double>(x);
      return std::sqrt(acc);
    case NormKind::Linf:
      for (T x : v) acc = std::max(acc, std::abs(static_cast<double>(x)));
      return acc;
  }
  throw std::logic_error("bad NormKind");
}

}  // namespace

double lp_norm(std::span<const float> v, NormKind p) { return lp_norm_impl(v, p); }
double lp_norm(std::span<const double> v, NormKind p) { return lp_norm_impl(v, p); }

Perturbation make_perturbation(std::span<const double> delta, NormKind norm, double budget) {
  Perturbation out;
  out.data.assign(delta.begin(), delta.end());
  out.norm = norm;
  out.budget = budget;
  double shrink = 1.0;
  for (int pass = 0; pass < 4; ++pass) {
    double n = lp_norm(std::span<const float>(out.data), norm);
    if (n <= budget * (1.0 + 1e-9)) break;
    // Shrink past the tolerance so one float32 re-round cannot overshoot again.
    shrink *= budget * (1.0 - 1e-6) / n;
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] = static_cast<float>(delta[i] * shrink);
  }
  return out;
}

void save_tensor(const std::filesystem::path& path, std::span<const std::uint32_t> dims,
                 std::span<const float> data) {
  if (dims.empty() || dims.size() > kMaxDims) throw DimOverflowError("bad dimension count on save");
  std::uint64_t n = 1;
  for (std::uint32_t d : dims) {
    if (d == 0) throw DimOverflowError("zero dimension on save");
    n *= d;
    if (n > kMaxElements) throw DimOverflowError("tensor too large on save");
  }
  if (n != data.size()) throw std::invalid_argument("payload length does not match dims");

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(kMagic, 4);
  std::uint32_t nd = static_cast<std::uint32_t>(dims.size());
  f.write(reinterpret_cast<const char*>(&nd), 4);
  f.write(reinterpret_cast<const char*>(dims.data()), 4 * static_cast<std::streamsize>(dims.size()));
  f.write(reinterpret_cast<const char*>(data.data()), 4 * static_cast<std::streamsize>(data.size()));
  if (!f) throw std::runtime_error("write failed on " + path.string());
}

RawTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());

  char magic[4];
  f.read(magic, 4);
  if (f.gcount() != 4) throw TruncatedFileError(path.string() + ": file shorter than header");
  if (std::memcmp(magic, kMagic, 4) != 0) throw BadMagicError(path.string() + ": bad magic");

  std::uint32_t nd = 0;
  f.read(reinterpret_cast<char*>(&nd), 4);
  if (f.gcount() != 4) throw TruncatedFileError(path.string() + ": truncated dim count");
  if (nd == 0 || nd > kMaxDims) throw DimOverflowError(path.string() + ": unreasonable dimension count");

  RawTensor out;
  out.dims.resize(nd);
  f.read(reinterpret_cast<char*>(out.dims.data()), 4 * static_cast<std::streamsize>(nd));
  if (f.gcount() != 4 * static_cast<std::streamsize>(nd))
    throw TruncatedFileError(path.string() + ": truncated dims");

  std::uint64_t n = 1;
  for (std::uint32_t d : out.dims) {
    if (d == 0) throw DimOverflowError(path.string() + ": zero dimension");
    n *= d;
    if (n > kMaxElements) throw DimOverflowError(path.string() + ": element count overflow");
  }

  out.data.resize(n);
  f.read(reinterpret_cast<char*>(out.data.data()), 4 * static_cast<std::streamsize>(n));
  if (f.gcount() != 4 * static_cast<std::streamsize>(n))
    throw TruncatedFileError(path.string() + ": payload shorter than declared");
  return out;
}

void save_image(const std::filesystem::path& path, const ImageTensor& img) {
  img.validate();
  std::uint32_t dims[3] = {static_cast<std::uint32_t>(img.height), static_cast<std::uint32_t>(img.width),
                           static_cast<std::uint32_t>(img.channels)};
  save_tensor(path, dims, img.data);
}

ImageTensor load_image(const std::filesystem::path& path) {
  RawTensor raw = load_tensor(path);
  if (raw.dims.size() != 3) throw std::runtime_error(path.string() + ": expected H x W x C tensor");
  ImageTensor img;
  img.height = static_cast<int>(raw.dims[0]);
  img.width = static_cast<int>(raw.dims[1]);
  img.channels = static_cast<int>(raw.dims[2]);
  img.data = std::move(raw.data);
  img.validate();
  return img;
}

void save_labels(const std::filesystem::path& path, const LabelMap& labels) {
  std::vector<float> payload(labels.labels.size());
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<float>(labels.labels[i]);
  std::uint32_t dims[3] = {static_cast<std::uint32_t>(labels.height), static_cast<std::uint32_t>(labels.width), 1};
  save_tensor(path, dims, payload);
}

LabelMap load_labels(const std::filesystem::path& path) {
  RawTensor raw = load_tensor(path);
  if (raw.dims.size() != 3 || raw.dims[2] != 1)
    throw std::runtime_error(path.string() + ": expected H x W x 1 label tensor");
  LabelMap out;
  out.height = static_cast<int>(raw.dims[0]);
  out.width = static_cast<int>(raw.dims[1]);
  out.labels.resize(raw.data.size());
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    float v = raw.data[i];
    if (v != std::floor(v) || v < 0.0f) throw std::runtime_error(path.string() + ": non-integer label value");
    out.labels[i] = static_cast<int>(v);
  }
  return out;
}

void save_perturbation(const std::filesystem::path& path, const Perturbation& delta) {
  delta.validate();
  std::uint32_t dims[1] = {static_cast<std::uint32_t>(delta.data.size())};
  save_tensor(path, dims, delta.data);
}

Perturbation load_perturbation(const std::filesystem::path& path, NormKind norm, double budget) {
  RawTensor raw = load_tensor(path);
  if (raw.dims.size() != 1) throw std::runtime_error(path.string() + ": expected flat perturbation");
  Perturbation out;
  out.data = std::move(raw.data);
  out.norm = norm;
  out.budget = budget;
  out.validate();
  return out;
}

void save_pgm(const std::filesystem::path& path, const LabelMap& labels, int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
  labels.validate(num_classes);
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << "P2\n" << labels.width << " " << labels.height << "\n255\n";
  int denom = std::max(1, num_classes - 1);
  for (int r = 0; r < labels.height; ++r) {
    for (int c = 0; c < labels.width; ++c) {
      if (c) f << ' ';
      f << (labels.at(r, c) * 255) / denom;
    }
    f << '\n';
  }
  if (!f) throw std::runtime_error("write failed on " + path.string());
}

}  // namespace crseg
