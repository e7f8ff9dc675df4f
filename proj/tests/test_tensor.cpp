#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crseg/tensor.hpp"

using namespace crseg;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("crseg_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("lp_norm matches hand values") {
  std::vector<float> a{3.0f, 4.0f};
  CHECK(lp_norm(std::span<const float>(a), NormKind::L2) == doctest::Approx(5.0).epsilon(1e-12));
  std::vector<float> b{3.0f, -4.0f};
  CHECK(lp_norm(std::span<const float>(b), NormKind::L1) == doctest::Approx(7.0).epsilon(1e-12));
  std::vector<float> c{0.5f, -0.9f, 0.1f};
  CHECK(lp_norm(std::span<const float>(c), NormKind::Linf) == static_cast<double>(0.9f));

  std::vector<double> d{3.0, -4.0};
  CHECK(lp_norm(std::span<const double>(d), NormKind::L2) == doctest::Approx(5.0));
  CHECK(lp_norm(std::span<const double>(d), NormKind::Linf) == doctest::Approx(4.0));
}

TEST_CASE("lp_norm rejects empty input") {
  std::vector<float> e;
  CHECK_THROWS_AS(lp_norm(std::span<const float>(e), NormKind::L2), std::invalid_argument);
  std::vector<double> ed;
  CHECK_THROWS_AS(lp_norm(std::span<const double>(ed), NormKind::L1), std::invalid_argument);
}

TEST_CASE("norm parsing round-trips and rejects junk") {
  CHECK(parse_norm("l1") == NormKind::L1);
  CHECK(parse_norm("l2") == NormKind::L2);
  CHECK(parse_norm("linf") == NormKind::Linf);
  CHECK(norm_name(NormKind::L1) == "l1");
  CHECK(norm_name(NormKind::L2) == "l2");
  CHECK(norm_name(NormKind::Linf) == "linf");
  CHECK_THROWS(parse_norm("l3"));
  CHECK_THROWS(parse_norm(""));
}

TEST_CASE("ImageTensor validate enforces shape and range") {
  ImageTensor img(2, 3, 1, 0.5f);
  CHECK_NOTHROW(img.validate());
  img.at(1, 2, 0) = 1.0f;
  img.at(0, 0, 0) = 0.0f;
  CHECK_NOTHROW(img.validate());
  img.at(0, 1, 0) = 1.0001f;
  CHECK_THROWS_AS(img.validate(), std::invalid_argument);
  img.at(0, 1, 0) = -0.0001f;
  CHECK_THROWS_AS(img.validate(), std::invalid_argument);
  img.at(0, 1, 0) = 0.5f;
  img.data.pop_back();
  CHECK_THROWS_AS(img.validate(), std::invalid_argument);
}

TEST_CASE("ProbMap validate checks the per-pixel simplex within 1e-5") {
  ProbMap p(1, 2, 3);
  float good[3] = {0.2f, 0.3f, 0.5f};
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < 3; ++k) p.at(0, c, k) = good[k];
  CHECK_NOTHROW(p.validate());

  p.at(0, 1, 2) = 0.5f + 2e-5f;  // row sums to 1 + 2e-5
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  p.at(0, 1, 2) = 0.5f + 5e-6f;  // within tolerance
  CHECK_NOTHROW(p.validate());

  p.at(0, 0, 0) = -0.1f;
  p.at(0, 0, 1) = 0.6f;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("LabelMap validate checks the class range") {
  LabelMap y(2, 2, 0);
  y.at(1, 1) = 3;
  CHECK_NOTHROW(y.validate(4));
  CHECK_THROWS_AS(y.validate(3), std::invalid_argument);
  y.at(0, 0) = -1;
  CHECK_THROWS_AS(y.validate(4), std::invalid_argument);
}

TEST_CASE("Perturbation validate allows the documented slack and no more") {
  Perturbation d;
  d.norm = NormKind::L2;
  d.budget = 5.0;
  d.data = {3.0f, 4.0f};
  CHECK_NOTHROW(d.validate());
  d.data = {3.1f, 4.0f};
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);

  Perturbation e;
  e.norm = NormKind::Linf;
  e.budget = 0.03;
  e.data = {0.03f, -0.03f};
  CHECK_NOTHROW(e.validate());
  e.data = {0.030001f};
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);
}

TEST_CASE("tensor files round-trip bit for bit") {
  fs::path dir = temp_dir("ftz_roundtrip");
  std::vector<std::uint32_t> dims{3, 4, 2};
  std::vector<float> data(24);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(i) * 0.37f - 1.5f;
  fs::path file = dir / "t.ftz";
  save_tensor(file, dims, data);

  RawTensor back = load_tensor(file);
  CHECK(back.dims == dims);
  REQUIRE(back.data.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(back.data[i] == data[i]);

  // Re-saving the loaded tensor reproduces the file byte for byte.
  fs::path file2 = dir / "t2.ftz";
  save_tensor(file2, back.dims, back.data);
  CHECK(slurp(file) == slurp(file2));
  fs::remove_all(dir);
}

TEST_CASE("tensor file errors are distinct types") {
  fs::path dir = temp_dir("ftz_errors");
  std::vector<std::uint32_t> dims{2, 2};
  std::vector<float> data{1.0f, 2.0f, 3.0f, 4.0f};
  fs::path good = dir / "good.ftz";
  save_tensor(good, dims, data);
  std::vector<char> bytes = slurp(good);

  SUBCASE("bad magic") {
    std::vector<char> bad = bytes;
    bad[0] = 'X';
    fs::path p = dir / "badmagic.ftz";
    spit(p, bad);
    CHECK_THROWS_AS(load_tensor(p), BadMagicError);
  }

  SUBCASE("truncated payload") {
    std::vector<char> bad(bytes.begin(), bytes.end() - 3);
    fs::path p = dir / "trunc.ftz";
    spit(p, bad);
    CHECK_THROWS_AS(load_tensor(p), TruncatedFileError);
  }

  SUBCASE("truncated header") {
    std::vector<char> bad(bytes.begin(), bytes.begin() + 6);
    fs::path p = dir / "trunc_hdr.ftz";
    spit(p, bad);
    CHECK_THROWS_AS(load_tensor(p), TruncatedFileError);
  }

  SUBCASE("too many dims") {
    std::vector<char> bad = bytes;
    bad[4] = 9;  // ndim byte (little endian u32)
    fs::path p = dir / "ndim.ftz";
    spit(p, bad);
    CHECK_THROWS_AS(load_tensor(p), DimOverflowError);
  }

  SUBCASE("zero dim") {
    std::vector<std::uint32_t> zdims{0, 2};
    fs::path p = dir / "zero.ftz";
    CHECK_THROWS_AS(save_tensor(p, zdims, std::vector<float>{}), DimOverflowError);
    // Hand-crafted file with a zero dim must be rejected on load too.
    std::vector<char> bad = bytes;
    bad[8] = 0;  // first dim -> 0
    fs::path q = dir / "zero2.ftz";
    spit(q, bad);
    CHECK_THROWS_AS(load_tensor(q), DimOverflowError);
  }

  SUBCASE("element count overflow") {
    std::vector<char> bad = bytes;
    // dims 0x7fffffff x 2 overflows the element cap.
    bad[8] = static_cast<char>(0xff);
    bad[9] = static_cast<char>(0xff);
    bad[10] = static_cast<char>(0xff);
    bad[11] = 0x7f;
    fs::path p = dir / "elems.ftz";
    spit(p, bad);
    CHECK_THROWS_AS(load_tensor(p), DimOverflowError);
  }

  SUBCASE("missing file") { CHECK_THROWS(load_tensor(dir / "nope.ftz")); }
  fs::remove_all(dir);
}

TEST_CASE("image and label maps survive the trip to disk") {
  fs::path dir = temp_dir("imgio");
  ImageTensor img(4, 5, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<float>((i * 7) % 11) / 10.0f;
  save_image(dir / "img.ftz", img);
  ImageTensor back = load_image(dir / "img.ftz");
  CHECK(back.height == 4);
  CHECK(back.width == 5);
  CHECK(back.channels == 3);
  CHECK(back.data == img.data);

  LabelMap y(4, 5);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 5; ++c) y.at(r, c) = (r + c) % 4;
  save_labels(dir / "lab.ftz", y);
  LabelMap yback = load_labels(dir / "lab.ftz");
  CHECK(yback.height == 4);
  CHECK(yback.width == 5);
  CHECK(yback.labels == y.labels);

  // Non-integer payload is not a label map.
  std::vector<std::uint32_t> dims{1, 1, 1};
  std::vector<float> frac{0.5f};
  save_tensor(dir / "frac.ftz", dims, frac);
  CHECK_THROWS(load_labels(dir / "frac.ftz"));
  fs::remove_all(dir);
}

TEST_CASE("perturbations carry norm metadata through save and load") {
  fs::path dir = temp_dir("delta_io");
  Perturbation d;
  d.norm = NormKind::Linf;
  d.budget = 0.0625;  // exactly representable, so the boundary entry is exact too
  d.data = {0.0625f, -0.03f, 0.0f, 0.011f};
  save_perturbation(dir / "d.ftz", d);
  Perturbation back = load_perturbation(dir / "d.ftz", NormKind::Linf, 0.0625);
  CHECK(back.data == d.data);
  CHECK(back.norm == NormKind::Linf);
  CHECK(back.budget == 0.0625);
  CHECK_NOTHROW(back.validate());

  // Loading against a tighter budget fails validation.
  CHECK_THROWS(load_perturbation(dir / "d.ftz", NormKind::Linf, 0.01));
  fs::remove_all(dir);
}

TEST_CASE("label masks render as text PGM") {
  fs::path dir = temp_dir("pgm");
  LabelMap y(2, 2);
  y.at(0, 0) = 0;
  y.at(0, 1) = 1;
  y.at(1, 0) = 2;
  y.at(1, 1) = 3;
  save_pgm(dir / "y.pgm", y, 4);
  std::ifstream in(dir / "y.pgm");
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  CHECK(magic == "P2");
  CHECK(w == 2);
  CHECK(h == 2);
  CHECK(maxv == 255);
  int v0 = -1, v1 = -1, v2 = -1, v3 = -1;
  in >> v0 >> v1 >> v2 >> v3;
  CHECK(v0 == 0);
  CHECK(v3 == 255);
  CHECK(v1 < v2);
  fs::remove_all(dir);
}
