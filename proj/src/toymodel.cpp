#include "crseg/toymodel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "crseg/projections.hpp"

namespace crseg {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMat = Eigen::Map<const RowMat>;
using ConstRow = Eigen::Map<const Eigen::RowVectorXd>;

constexpr double kLogClamp = 1e-12;

// Low-contrast palette around mid-gray; entry 0 is the background. The offsets
// are small against the default noise std on purpose (see the header note).
const double kPalette[8][3] = {
    {0.5000, 0.5000, 0.5000}, {0.5700, 0.4825, 0.4825}, {0.4825, 0.5700, 0.4825}, {0.4825, 0.4825, 0.5700},
    {0.5490, 0.5490, 0.4720}, {0.4720, 0.5490, 0.5490}, {0.5490, 0.4720, 0.5490}, {0.4510, 0.4510, 0.4510},
};

// Pixels x window matrix of flattened neighborhoods, replicate padding at borders.
void build_patches(const ImageTensor& x, int k, RowMat& P) {
  const int H = x.height, W = x.width, C = x.channels;
  const int side = 2 * k + 1;
  P.resize(static_cast<Eigen::Index>(H) * W, static_cast<Eigen::Index>(side) * side * C);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      double* row = P.data() + (static_cast<Eigen::Index>(r) * W + c) * P.cols();
      int j = 0;
      for (int dr = -k; dr <= k; ++dr) {
        int rr = std::clamp(r + dr, 0, H - 1);
        for (int dc = -k; dc <= k; ++dc) {
          int cc = std::clamp(c + dc, 0, W - 1);
          const float* px = &x.data[(static_cast<std::size_t>(rr) * W + cc) * C];
          for (int ch = 0; ch < C; ++ch) row[j++] = px[ch];
        }
      }
    }
  }
}

struct Activations {
  RowMat P;      // pixels x window
  RowMat H;      // pixels x hidden, post ReLU
  RowMat probs;  // pixels x classes
};

Activations run_forward(const ToyModelConfig& cfg, const std::vector<double>& w1, const std::vector<double>& b1,
                        const std::vector<double>& w2, const std::vector<double>& b2, const ImageTensor& x) {
  if (x.channels != cfg.channels) throw std::invalid_argument("image channel count does not match model");
  Activations act;
  build_patches(x, cfg.patch_radius, act.P);
  ConstMat W1(w1.data(), cfg.hidden, cfg.window());
  ConstMat W2(w2.data(), cfg.num_classes, cfg.hidden);
  act.H.noalias() = act.P * W1.transpose();
  act.H.rowwise() += ConstRow(b1.data(), cfg.hidden);
  act.H = act.H.cwiseMax(0.0);
  act.probs.noalias() = act.H * W2.transpose();
  act.probs.rowwise() += ConstRow(b2.data(), cfg.num_classes);
  for (Eigen::Index n = 0; n < act.probs.rows(); ++n) {
    auto row = act.probs.row(n);
    double m = row.maxCoeff();
    row = (row.array() - m).exp();
    row /= row.sum();
  }
  return act;
}

// d(mean weighted CE)/d(logits), already divided by the pixel count.
RowMat logit_grad(const Activations& act, const LabelMap& truth, const WeightMap* weights) {
  RowMat dZ = act.probs;
  const double inv_n = 1.0 / static_cast<double>(truth.labels.size());
  for (Eigen::Index n = 0; n < dZ.rows(); ++n) {
    dZ(n, truth.labels[n]) -= 1.0;
    double w = weights ? weights->weights[n] : 1.0;
    dZ.row(n) *= w * inv_n;
  }
  return dZ;
}

double loss_from_probs(const RowMat& probs, const LabelMap& truth, const WeightMap* weights) {
  double acc = 0.0;
  for (Eigen::Index n = 0; n < probs.rows(); ++n) {
    double w = weights ? weights->weights[n] : 1.0;
    acc += w * -std::log(std::max(probs(n, truth.labels[n]), kLogClamp));
  }
  return acc / static_cast<double>(truth.labels.size());
}

void check_truth(const ImageTensor& x, const LabelMap& truth, const WeightMap* weights, int num_classes) {
  if (truth.height != x.height || truth.width != x.width)
    throw std::invalid_argument("label map shape does not match image");
  truth.validate(num_classes);
  if (weights && weights->weights.size() != truth.labels.size())
    throw std::invalid_argument("weight map shape does not match image");
}

}  // namespace

Dataset gen_synthetic_dataset(const SynthDatasetSpec& spec) {
  if (spec.count < 1) throw std::invalid_argument("bad dataset shape");
  if (spec.height < 16 || spec.width < 16) throw std::invalid_argument("dataset images must be at least 16x16");
  if (spec.num_classes < 2 || spec.num_classes > 8)
    throw std::invalid_argument("num_classes must be in [2,8] (palette size)");
  if (!(spec.texture_noise >= 0.0) || !std::isfinite(spec.texture_noise))
    throw std::invalid_argument("texture noise std must be finite and non-negative");

  const int H = spec.height, W = spec.width;
  RandomSource base(spec.seed);
  Dataset out;
  out.reserve(spec.count);
  for (int i = 0; i < spec.count; ++i) {
    RandomSource rng = base.split(static_cast<std::uint64_t>(i));
    ImageTensor img(H, W, 3);
    LabelMap lab(H, W);
    int shapes = 1 + static_cast<int>(rng.next_below(3));
    std::vector<std::array<int, 4>> boxes;  // rmin, rmax, cmin, cmax
    for (int s = 0; s < shapes; ++s) {
      // Deterministic class cycle over the non-background classes so every
      // class appears across the dataset even when placements are unlucky.
      int cls = 1 + (i + s) % (spec.num_classes - 1);
      for (int attempt = 0; attempt < 20; ++attempt) {
        int kind = static_cast<int>(rng.next_below(2));  // 0 rectangle, 1 disk
        int emax = std::max(4, std::min(H, W) / 4);
        int er = 4 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(emax) - 3));
        int ec = kind == 0 ? 4 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(emax) - 3)) : er;
        if (2 * er + 1 > H - 2 || 2 * ec + 1 > W - 2) continue;
        int cr = er + 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(H) - 2 * er - 1));
        int cc = ec + 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(W) - 2 * ec - 1));
        std::array<int, 4> box{cr - er, cr + er, cc - ec, cc + ec};
        bool clash = false;
        for (const auto& b : boxes)
          if (box[0] <= b[1] && b[0] <= box[1] && box[2] <= b[3] && b[2] <= box[3]) clash = true;
        if (clash) continue;
        boxes.push_back(box);
        for (int r = box[0]; r <= box[1]; ++r) {
          for (int c = box[2]; c <= box[3]; ++c) {
            if (kind == 1) {
              long dr = r - cr, dc = c - cc;
              if (dr * dr + dc * dc > static_cast<long>(er) * er) continue;
            }
            lab.at(r, c) = cls;
          }
        }
        break;
      }
    }
    for (int r = 0; r < H; ++r) {
      for (int c = 0; c < W; ++c) {
        const double* base_col = kPalette[lab.at(r, c)];
        for (int ch = 0; ch < 3; ++ch) {
          double v = base_col[ch] + rng.next_gaussian() * spec.texture_noise;
          img.at(r, c, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
    out.push_back({std::move(img), std::move(lab)});
  }
  return out;
}

ToySegModel::ToySegModel(const ToyModelConfig& cfg, RandomSource& rng) : cfg_(cfg) {
  if (cfg.patch_radius < 0 || cfg.hidden < 1 || cfg.num_classes < 2 || cfg.channels < 1)
    throw std::invalid_argument("bad model config");
  const int win = cfg.window();
  w1_.resize(static_cast<std::size_t>(cfg.hidden) * win);
  b1_.assign(cfg.hidden, 0.0);
  w2_.resize(static_cast<std::size_t>(cfg.num_classes) * cfg.hidden);
  b2_.assign(cfg.num_classes, 0.0);
  double s1 = std::sqrt(2.0 / win), s2 = std::sqrt(2.0 / cfg.hidden);
  for (double& v : w1_) v = s1 * rng.next_gaussian();
  for (double& v : w2_) v = s2 * rng.next_gaussian();
}

ProbMap ToySegModel::forward(const ImageTensor& x) const {
  Activations act = run_forward(cfg_, w1_, b1_, w2_, b2_, x);
  ProbMap out(x.height, x.width, cfg_.num_classes);
  for (Eigen::Index n = 0; n < act.probs.rows(); ++n)
    for (int k = 0; k < cfg_.num_classes; ++k)
      out.data[static_cast<std::size_t>(n) * cfg_.num_classes + k] = static_cast<float>(act.probs(n, k));
  return out;
}

double ToySegModel::loss(const ImageTensor& x, const LabelMap& truth, const WeightMap* weights) const {
  check_truth(x, truth, weights, cfg_.num_classes);
  Activations act = run_forward(cfg_, w1_, b1_, w2_, b2_, x);
  return loss_from_probs(act.probs, truth, weights);
}

InputGradient ToySegModel::input_gradient(const ImageTensor& x, const LabelMap& truth,
                                          const WeightMap* weights) const {
  check_truth(x, truth, weights, cfg_.num_classes);
  Activations act = run_forward(cfg_, w1_, b1_, w2_, b2_, x);
  ConstMat W1(w1_.data(), cfg_.hidden, cfg_.window());
  ConstMat W2(w2_.data(), cfg_.num_classes, cfg_.hidden);

  RowMat dZ = logit_grad(act, truth, weights);
  RowMat dH = dZ * W2;
  dH.array() *= (act.H.array() > 0.0).cast<double>();
  RowMat dP = dH * W1;

  InputGradient out;
  out.loss = loss_from_probs(act.probs, truth, weights);
  out.gradient.assign(x.data.size(), 0.0);
  const int k = cfg_.patch_radius, H = x.height, W = x.width, C = cfg_.channels;
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const double* row = dP.data() + (static_cast<Eigen::Index>(r) * W + c) * dP.cols();
      int j = 0;
      for (int dr = -k; dr <= k; ++dr) {
        int rr = std::clamp(r + dr, 0, H - 1);
        for (int dc = -k; dc <= k; ++dc) {
          int cc = std::clamp(c + dc, 0, W - 1);
          double* g = &out.gradient[(static_cast<std::size_t>(rr) * W + cc) * C];
          for (int ch = 0; ch < C; ++ch) g[ch] += row[j++];
        }
      }
    }
  }
  return out;
}

double ToySegModel::train_step(const ImageTensor& x, const LabelMap& truth, double lr, const WeightMap* weights) {
  check_truth(x, truth, weights, cfg_.num_classes);
  Activations act = run_forward(cfg_, w1_, b1_, w2_, b2_, x);
  double pre_loss = loss_from_probs(act.probs, truth, weights);

  RowMat dZ = logit_grad(act, truth, weights);
  ConstMat W2(w2_.data(), cfg_.num_classes, cfg_.hidden);
  RowMat dH = dZ * W2;
  dH.array() *= (act.H.array() > 0.0).cast<double>();

  RowMat dW2 = dZ.transpose() * act.H;
  Eigen::RowVectorXd db2 = dZ.colwise().sum();
  RowMat dW1 = dH.transpose() * act.P;
  Eigen::RowVectorXd db1 = dH.colwise().sum();

  Eigen::Map<RowMat>(w1_.data(), cfg_.hidden, cfg_.window()) -= lr * dW1;
  Eigen::Map<Eigen::RowVectorXd>(b1_.data(), cfg_.hidden) -= lr * db1;
  Eigen::Map<RowMat>(w2_.data(), cfg_.num_classes, cfg_.hidden) -= lr * dW2;
  Eigen::Map<Eigen::RowVectorXd>(b2_.data(), cfg_.num_classes) -= lr * db2;
  return pre_loss;
}

std::vector<double>& ToySegModel::params(int which) {
  switch (which) {
    case 0: return w1_;
    case 1: return b1_;
    case 2: return w2_;
    case 3: return b2_;
  }
  throw std::out_of_range("param index");
}

void ToySegModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto dump = [&](const char* name, const std::vector<double>& v, std::vector<std::uint32_t> dims) {
    std::vector<float> f(v.begin(), v.end());
    save_tensor(dir / name, dims, f);
  };
  dump("w1.ftz", w1_, {static_cast<std::uint32_t>(cfg_.hidden), static_cast<std::uint32_t>(cfg_.window())});
  dump("b1.ftz", b1_, {static_cast<std::uint32_t>(cfg_.hidden)});
  dump("w2.ftz", w2_, {static_cast<std::uint32_t>(cfg_.num_classes), static_cast<std::uint32_t>(cfg_.hidden)});
  dump("b2.ftz", b2_, {static_cast<std::uint32_t>(cfg_.num_classes)});

  std::ofstream meta(dir / "model.meta", std::ios::trunc);
  if (!meta) throw std::runtime_error("cannot write model.meta");
  meta << "patch_radius=" << cfg_.patch_radius << "\nhidden=" << cfg_.hidden
       << "\nnum_classes=" << cfg_.num_classes << "\nchannels=" << cfg_.channels << "\n";
}

ToySegModel ToySegModel::load(const std::filesystem::path& dir) {
  std::ifstream meta(dir / "model.meta");
  if (!meta) throw std::runtime_error("cannot open " + (dir / "model.meta").string());
  std::map<std::string, int> kv;
  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed model.meta line: " + line);
    kv[line.substr(0, eq)] = std::stoi(line.substr(eq + 1));
  }
  for (const char* key : {"patch_radius", "hidden", "num_classes", "channels"})
    if (!kv.count(key)) throw std::runtime_error(std::string("model.meta missing ") + key);

  ToySegModel m;
  m.cfg_ = {kv["patch_radius"], kv["hidden"], kv["num_classes"], kv["channels"]};
  auto pull = [&](const char* name, std::vector<std::uint32_t> want) {
    RawTensor raw = load_tensor(dir / name);
    if (raw.dims != want) throw std::runtime_error(std::string(name) + ": checkpoint shape mismatch");
    return std::vector<double>(raw.data.begin(), raw.data.end());
  };
  m.w1_ = pull("w1.ftz", {static_cast<std::uint32_t>(m.cfg_.hidden), static_cast<std::uint32_t>(m.cfg_.window())});
  m.b1_ = pull("b1.ftz", {static_cast<std::uint32_t>(m.cfg_.hidden)});
  m.w2_ = pull("w2.ftz", {static_cast<std::uint32_t>(m.cfg_.num_classes), static_cast<std::uint32_t>(m.cfg_.hidden)});
  m.b2_ = pull("b2.ftz", {static_cast<std::uint32_t>(m.cfg_.num_classes)});
  return m;
}

TrainStats train_model(ToySegModel& model, const Dataset& data, const TrainConfig& cfg, RandomSource& rng) {
  if (data.empty()) throw std::invalid_argument("empty dataset");
  TrainStats stats;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int e = 0; e < cfg.epochs; ++e) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);
    double acc = 0.0;
    for (std::size_t i : order) acc += model.train_step(data[i].image, data[i].labels, cfg.lr);
    stats.epoch_loss.push_back(acc / static_cast<double>(data.size()));
  }
  return stats;
}

TrainStats fast_adt(ToySegModel& model, const Dataset& data, const FastAdtConfig& cfg, RandomSource& rng) {
  if (data.empty()) throw std::invalid_argument("empty dataset");
  if (cfg.eps < 0.0) throw std::invalid_argument("eps must be non-negative");
  TrainStats stats;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t visit = 0;

  for (int e = 0; e < cfg.epochs; ++e) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);
    double acc = 0.0;
    for (std::size_t i : order) {
      const ImageTensor& x = data[i].image;
      const LabelMap& y = data[i].labels;
      std::vector<double> delta(x.data.size());
      for (double& d : delta) d = (2.0 * rng.next_unit() - 1.0) * cfg.eps;

      if (!cfg.cr_guided) {
        InputGradient g = model.input_gradient(clip_image(x, std::span<const double>(delta)), y);
        for (std::size_t j = 0; j < delta.size(); ++j) {
          double s = g.gradient[j] > 0.0 ? 1.0 : (g.gradient[j] < 0.0 ? -1.0 : 0.0);
          delta[j] = std::clamp(delta[j] + cfg.alpha * s, -cfg.eps, cfg.eps);
        }
      } else {
        // Weight map estimated once per visit (interval >= inner step count),
        // then a short sign-ascent on the weighted loss.
        WeightMap weights;
        double step = cfg.eps / static_cast<double>(cfg.inner_steps);
        for (int t = 0; t < cfg.inner_steps; ++t) {
          if (t % cfg.smoothing.recompute_interval == 0) {
            ProbMap sm = smoothed_probs([&](const ImageTensor& q) { return model.forward(q); },
                                        clip_image(x, std::span<const double>(delta)), cfg.smoothing,
                                        rng.split(++visit));
            weights = pixel_weights(pixel_certified_radius(sm, cfg.smoothing.sigma), cfg.smoothing.weight_a,
                                    cfg.smoothing.weight_b);
          }
          InputGradient g = model.input_gradient(clip_image(x, std::span<const double>(delta)), y, &weights);
          for (std::size_t j = 0; j < delta.size(); ++j) {
            double s = g.gradient[j] > 0.0 ? 1.0 : (g.gradient[j] < 0.0 ? -1.0 : 0.0);
            delta[j] = std::clamp(delta[j] + step * s, -cfg.eps, cfg.eps);
          }
        }
      }
      acc += model.train_step(clip_image(x, std::span<const double>(delta)), y, cfg.lr);
    }
    stats.epoch_loss.push_back(acc / static_cast<double>(data.size()));
  }
  return stats;
}

}  // namespace crseg
