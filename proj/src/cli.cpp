#include "crseg/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <sstream>
#include <thread>

#include "crseg/blackbox.hpp"
#include "crseg/metrics.hpp"
#include "crseg/projections.hpp"
#include "crseg/regretlab.hpp"
#include "crseg/tensor.hpp"
#include "crseg/toymodel.hpp"
#include "crseg/version.hpp"
#include "crseg/whitebox.hpp"

namespace crseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- Config

Config Config::from_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto is_space = [](unsigned char c) { return std::isspace(c); };
    line.erase(line.begin(), std::find_if_not(line.begin(), line.end(), is_space));
    line.erase(std::find_if_not(line.rbegin(), line.rend(), is_space).base(), line.end());
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + " is not key=value: " + line);
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    key.erase(std::find_if_not(key.rbegin(), key.rend(), is_space).base(), key.end());
    val.erase(val.begin(), std::find_if_not(val.begin(), val.end(), is_space));
    if (key.empty()) throw std::runtime_error("empty key in config line " + std::to_string(lineno));
    cfg.values_[key] = val;
  }
  return cfg;
}

void Config::apply_override(const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw std::runtime_error("--set expects key=value, got: " + kv);
  values_[kv.substr(0, eq)] = kv.substr(eq + 1);
}

std::string Config::raw(const std::string& key, const std::optional<std::string>& def) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    if (!def) throw std::runtime_error("config is missing required key '" + key + "'");
    resolved_[key] = *def;
    return *def;
  }
  resolved_[key] = it->second;
  return it->second;
}

std::string Config::get_str(const std::string& key, std::optional<std::string> def) { return raw(key, def); }

double Config::get_num(const std::string& key, std::optional<double> def) {
  std::optional<std::string> d;
  if (def) {
    std::ostringstream os;
    os.precision(17);
    os << *def;
    d = os.str();
  }
  std::string v = raw(key, d);
  try {
    std::size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "' is not a number: " + v);
  }
}

long long Config::get_int(const std::string& key, std::optional<long long> def) {
  std::optional<std::string> d;
  if (def) d = std::to_string(*def);
  std::string v = raw(key, d);
  try {
    std::size_t used = 0;
    long long out = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "' is not an integer: " + v);
  }
}

bool Config::get_flag(const std::string& key, bool def) {
  long long v = get_int(key, def ? 1 : 0);
  if (v != 0 && v != 1) throw std::runtime_error("config key '" + key + "' must be 0 or 1");
  return v == 1;
}

void Config::reject_unknown() const {
  for (const auto& [k, v] : values_)
    if (!resolved_.count(k)) throw std::runtime_error("unknown config key '" + k + "'");
}

std::string Config::resolved(const std::string& header_comment) const {
  std::ostringstream out;
  out << "# " << header_comment << "\n";
  for (const auto& [k, v] : resolved_) out << k << "=" << v << "\n";
  return out.str();
}

// ---------------------------------------------------------------- helpers

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed on " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string zero_pad(int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", n);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ';') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Fan images out over a bounded pool. Each job only depends on its own index,
// so the schedule cannot change any result. The first failure wins; remaining
// jobs still run to completion before it is rethrown.
void parallel_images(int count, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!failed.exchange(true)) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct StoredDataset {
  Dataset samples;
  int classes = 0;
};

void store_dataset(const fs::path& dir, const Dataset& data, int classes) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < data.size(); ++i) {
    save_image(dir / ("img_" + zero_pad(static_cast<int>(i)) + ".ftz"), data[i].image);
    save_labels(dir / ("lab_" + zero_pad(static_cast<int>(i)) + ".ftz"), data[i].labels);
    save_pgm(dir / ("lab_" + zero_pad(static_cast<int>(i)) + ".pgm"), data[i].labels, classes);
  }
  std::ostringstream meta;
  meta << "count=" << data.size() << "\nheight=" << data[0].image.height << "\nwidth=" << data[0].image.width
       << "\nclasses=" << classes << "\n";
  write_text(dir / "dataset.meta", meta.str());
}

StoredDataset load_dataset(const fs::path& dir, int limit = 0) {
  Config meta = Config::from_file(dir / "dataset.meta");
  StoredDataset out;
  int count = static_cast<int>(meta.get_int("count"));
  out.classes = static_cast<int>(meta.get_int("classes"));
  meta.get_int("height");
  meta.get_int("width");
  if (limit > 0) count = std::min(count, limit);
  for (int i = 0; i < count; ++i) {
    Sample s;
    s.image = load_image(dir / ("img_" + zero_pad(i) + ".ftz"));
    s.labels = load_labels(dir / ("lab_" + zero_pad(i) + ".ftz"));
    s.labels.validate(out.classes);
    out.samples.push_back(std::move(s));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

SmoothingConfig smoothing_from(Config& cfg, const SmoothingConfig& def) {
  SmoothingConfig s;
  s.sigma = cfg.get_num("sigma", def.sigma);
  s.samples = static_cast<int>(cfg.get_int("samples", def.samples));
  s.weight_a = cfg.get_num("weight_a", def.weight_a);
  s.weight_b = cfg.get_num("weight_b", def.weight_b);
  s.recompute_interval = static_cast<int>(cfg.get_int("interval", def.recompute_interval));
  return s;
}

// ---------------------------------------------------------------- commands

int cmd_gen_data(Config& cfg, const fs::path& out) {
  SynthDatasetSpec spec;
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  spec.count = static_cast<int>(cfg.get_int("count", 64));
  spec.height = static_cast<int>(cfg.get_int("height", 32));
  spec.width = static_cast<int>(cfg.get_int("width", 32));
  spec.num_classes = static_cast<int>(cfg.get_int("classes", 4));
  spec.texture_noise = cfg.get_num("noise", 0.08);
  cfg.reject_unknown();

  Dataset data = gen_synthetic_dataset(spec);
  store_dataset(out, data, spec.num_classes);
  write_text(out / "resolved.cfg", cfg.resolved(std::string("crseg gen-data ") + kBuildVersion));
  std::cout << "wrote " << data.size() << " images to " << out.string() << "\n";
  return 0;
}

int cmd_train(Config& cfg, const fs::path& out) {
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  fs::path dataset_dir = cfg.get_str("dataset");
  TrainConfig tc;
  tc.epochs = static_cast<int>(cfg.get_int("epochs", tc.epochs));
  tc.lr = cfg.get_num("lr", tc.lr);
  int hidden = static_cast<int>(cfg.get_int("hidden", 32));
  int patch_radius = static_cast<int>(cfg.get_int("patch_radius", 2));
  cfg.reject_unknown();

  StoredDataset ds = load_dataset(dataset_dir);
  ToyModelConfig mc;
  mc.hidden = hidden;
  mc.patch_radius = patch_radius;
  mc.num_classes = ds.classes;
  mc.channels = ds.samples[0].image.channels;
  RandomSource rng(seed, 1);
  ToySegModel model(mc, rng);
  TrainStats stats = train_model(model, ds.samples, tc, rng);

  fs::create_directories(out);
  model.save(out / "model");

  std::vector<LabelMap> pred, truth;
  for (const auto& s : ds.samples) {
    pred.push_back(argmax_labels(model.forward(s.image)));
    truth.push_back(s.labels);
  }
  json j;
  j["seed"] = seed;
  j["epochs"] = tc.epochs;
  j["epoch_loss"] = stats.epoch_loss;
  j["train_pixacc"] = pix_acc(pred, truth);
  j["train_miou"] = miou(pred, truth, ds.classes);
  write_json(out / "train.json", j);
  write_text(out / "resolved.cfg", cfg.resolved(std::string("crseg train ") + kBuildVersion));
  std::cout << "train pixacc " << j["train_pixacc"] << " after " << tc.epochs << " epochs\n";
  return 0;
}

int cmd_defend(Config& cfg, const fs::path& out) {
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  fs::path dataset_dir = cfg.get_str("dataset");
  FastAdtConfig fc;
  fc.epochs = static_cast<int>(cfg.get_int("epochs", fc.epochs));
  fc.lr = cfg.get_num("lr", fc.lr);
  fc.eps = cfg.get_num("eps", fc.eps);
  fc.alpha = cfg.get_num("alpha", 1.25 * fc.eps);
  fc.cr_guided = cfg.get_flag("cr", false);
  fc.inner_steps = static_cast<int>(cfg.get_int("inner_steps", 5));
  fc.smoothing = smoothing_from(cfg, fc.smoothing);
  int hidden = static_cast<int>(cfg.get_int("hidden", 32));
  int patch_radius = static_cast<int>(cfg.get_int("patch_radius", 2));
  cfg.reject_unknown();

  StoredDataset ds = load_dataset(dataset_dir);
  ToyModelConfig mc;
  mc.hidden = hidden;
  mc.patch_radius = patch_radius;
  mc.num_classes = ds.classes;
  mc.channels = ds.samples[0].image.channels;
  RandomSource rng(seed, 1);
  ToySegModel model(mc, rng);
  TrainStats stats = fast_adt(model, ds.samples, fc, rng);

  fs::create_directories(out);
  model.save(out / "model");
  json j;
  j["seed"] = seed;
  j["epochs"] = fc.epochs;
  j["eps"] = fc.eps;
  j["cr"] = fc.cr_guided;
  j["epoch_loss"] = stats.epoch_loss;
  write_json(out / "defend.json", j);
  write_text(out / "resolved.cfg", cfg.resolved(std::string("crseg defend ") + kBuildVersion));
  std::cout << "adversarially trained model written to " << (out / "model").string() << "\n";
  return 0;
}

int cmd_certify(Config& cfg, const fs::path& out) {
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  fs::path dataset_dir = cfg.get_str("dataset");
  fs::path model_dir = cfg.get_str("model");
  SmoothingConfig sc = smoothing_from(cfg, SmoothingConfig{});
  int count = static_cast<int>(cfg.get_int("count", 0));
  int workers = static_cast<int>(cfg.get_int("workers", std::thread::hardware_concurrency()));
  cfg.reject_unknown();

  StoredDataset ds = load_dataset(dataset_dir, count);
  ToySegModel model = ToySegModel::load(model_dir);
  fs::create_directories(out);

  RandomSource master(seed);
  int n = static_cast<int>(ds.samples.size());
  std::vector<double> mean_radius(n), mean_weight(n);
  parallel_images(n, workers, [&](int i) {
    const ImageTensor& x = ds.samples[i].image;
    ProbMap sm = smoothed_probs([&](const ImageTensor& q) { return model.forward(q); }, x, sc,
                                master.split(static_cast<std::uint64_t>(i)));
    CertifiedRadiusMap cr = pixel_certified_radius(sm, sc.sigma);
    WeightMap w = pixel_weights(cr, sc.weight_a, sc.weight_b);

    std::vector<float> crf(cr.radii.begin(), cr.radii.end());
    std::vector<float> wf(w.weights.begin(), w.weights.end());
    std::uint32_t dims[2] = {static_cast<std::uint32_t>(cr.height), static_cast<std::uint32_t>(cr.width)};
    save_tensor(out / ("cr_" + zero_pad(i) + ".ftz"), dims, crf);
    save_tensor(out / ("weights_" + zero_pad(i) + ".ftz"), dims, wf);
    mean_radius[i] = mean_of(cr.radii);
    mean_weight[i] = mean_of(w.weights);
  });

  json j;
  j["seed"] = seed;
  j["images"] = n;
  j["sigma"] = sc.sigma;
  j["samples"] = sc.samples;
  j["mean_radius"] = mean_radius;
  j["mean_weight"] = mean_weight;
  j["overall_mean_radius"] = mean_of(mean_radius);
  write_json(out / "certify.json", j);
  write_text(out / "resolved.cfg", cfg.resolved(std::string("crseg certify ") + kBuildVersion));
  std::cout << "certified " << n << " images, mean radius " << mean_of(mean_radius) << "\n";
  return 0;
}

struct ImageOutcome {
  LabelMap pred_clean, pred_attacked, truth;
  double delta_l1 = 0, delta_l2 = 0, delta_linf = 0;
  std::uint64_t queries = 0;
  double wall_ms = 0;
  bool budget_exhausted = false;
};

int cmd_attack(Config& cfg, const fs::path& out) {
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  fs::path dataset_dir = cfg.get_str("dataset");
  fs::path model_dir = cfg.get_str("model");
  std::string algorithm = cfg.get_str("algorithm");
  bool black_box = algorithm == "pbgd" || algorithm == "cr_pbgd";

  NormKind norm = parse_norm(cfg.get_str("norm", black_box ? "l2" : "linf"));
  double eps = cfg.get_num("eps", black_box ? 1.0 : 0.03);
  int steps = static_cast<int>(cfg.get_int("steps", black_box ? 1000 : 20));
  double default_alpha = black_box ? 5e-4 : (norm == NormKind::Linf ? eps / steps : 2.5 * eps / steps);
  double alpha = cfg.get_num("alpha", default_alpha);
  double gamma = cfg.get_num("gamma", 0.01);
  SmoothingConfig sc = smoothing_from(cfg, black_box ? BlackBoxAttackConfig{}.smoothing : SmoothingConfig{});
  long long query_limit = cfg.get_int("query_limit", 0);
  int bookkeep = static_cast<int>(cfg.get_int("bookkeep", 0));
  int count = static_cast<int>(cfg.get_int("count", 0));
  int workers = static_cast<int>(cfg.get_int("workers", std::thread::hardware_concurrency()));
  cfg.reject_unknown();

  static const std::vector<std::string> known = {"fgsm", "pgd", "cr_pgd", "cr_fgsm", "dag", "pbgd", "cr_pbgd"};
  if (std::find(known.begin(), known.end(), algorithm) == known.end())
    throw std::runtime_error("unknown algorithm '" + algorithm + "'");
  if (algorithm == "dag" && norm != NormKind::Linf) throw std::runtime_error("dag supports linf only");

  StoredDataset ds = load_dataset(dataset_dir, count);
  ToySegModel model = ToySegModel::load(model_dir);
  fs::create_directories(out);

  RandomSource master(seed);
  int n = static_cast<int>(ds.samples.size());
  std::vector<ImageOutcome> outcomes(n);

  parallel_images(n, workers, [&](int i) {
    const ImageTensor& x = ds.samples[i].image;
    const LabelMap& y = ds.samples[i].labels;
    RandomSource rng = master.split(static_cast<std::uint64_t>(i));
    ToyModelOracle oracle(model);
    auto t0 = std::chrono::steady_clock::now();

    Perturbation delta;
    std::string trace;
    if (black_box) {
      BlackBoxAttackConfig bc;
      bc.norm = norm;
      bc.eps = eps;
      bc.rounds = steps;
      bc.alpha = alpha;
      bc.gamma = gamma;
      bc.cr_guided = algorithm == "cr_pbgd";
      bc.smoothing = sc;
      if (query_limit > 0) bc.query_limit = static_cast<std::uint64_t>(query_limit);
      bc.bookkeep_interval = bookkeep;
      BlackBoxResult r = bc.cr_guided ? cr_pbgd(oracle, x, y, bc, rng) : pbgd(oracle, x, y, bc, rng);
      delta = r.budget_exhausted ? r.delta_best : r.delta;
      outcomes[i].budget_exhausted = r.budget_exhausted;
      std::ostringstream tr;
      tr.precision(10);
      tr << "round,loss_plus,loss_minus,queries_cum,grad_norm\n";
      for (const auto& rec : r.trace.rounds)
        tr << rec.round << "," << rec.loss_plus << "," << rec.loss_minus << "," << rec.queries_cum << ","
           << rec.grad_norm << "\n";
      trace = tr.str();
    } else {
      AttackResult r;
      if (algorithm == "fgsm") {
        r = fgsm(oracle, x, y, norm, eps);
      } else if (algorithm == "pgd") {
        WhiteBoxAttackConfig wc{norm, eps, steps, alpha, false, sc};
        r = pgd(oracle, x, y, wc);
      } else if (algorithm == "cr_pgd") {
        WhiteBoxAttackConfig wc{norm, eps, steps, alpha, true, sc};
        r = cr_pgd(oracle, x, y, wc, rng);
      } else if (algorithm == "cr_fgsm") {
        r = cr_fgsm(oracle, x, y, norm, eps, sc, rng);
      } else {
        r = dag(oracle, x, y, eps, steps);
      }
      delta = std::move(r.delta);
      std::ostringstream tr;
      tr.precision(10);
      tr << "iter,loss,queries\n";
      for (const auto& rec : r.trace) tr << rec.iter << "," << rec.loss << "," << rec.queries << "\n";
      trace = tr.str();
    }
    auto t1 = std::chrono::steady_clock::now();

    ImageOutcome& o = outcomes[i];
    o.truth = y;
    o.pred_clean = argmax_labels(model.forward(x));
    o.pred_attacked = argmax_labels(model.forward(clip_image(x, std::span<const float>(delta.data))));
    std::span<const float> d(delta.data);
    o.delta_l1 = lp_norm(d, NormKind::L1);
    o.delta_l2 = lp_norm(d, NormKind::L2);
    o.delta_linf = lp_norm(d, NormKind::Linf);
    o.queries = oracle.queries().count();
    o.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    save_perturbation(out / ("delta_" + zero_pad(i) + ".ftz"), delta);
    write_text(out / ("trace_" + zero_pad(i) + ".csv"), trace);

    json s;
    s["image"] = i;
    std::vector<LabelMap> p1{o.pred_clean}, p2{o.pred_attacked}, t{o.truth};
    s["pixacc_clean"] = pix_acc(p1, t);
    s["pixacc_attacked"] = pix_acc(p2, t);
    s["miou_clean"] = miou(p1, t, ds.classes);
    s["miou_attacked"] = miou(p2, t, ds.classes);
    s["delta_l1"] = o.delta_l1;
    s["delta_l2"] = o.delta_l2;
    s["delta_linf"] = o.delta_linf;
    s["queries"] = o.queries;
    s["budget_exhausted"] = o.budget_exhausted;
    s["wall_ms"] = o.wall_ms;
    write_json(out / ("summary_" + zero_pad(i) + ".json"), s);
  });

  std::vector<LabelMap> clean, attacked, truth;
  std::vector<double> q, l1s, l2s, linfs, pa_c, pa_a;
  for (const auto& o : outcomes) {
    clean.push_back(o.pred_clean);
    attacked.push_back(o.pred_attacked);
    truth.push_back(o.truth);
    q.push_back(static_cast<double>(o.queries));
    l1s.push_back(o.delta_l1);
    l2s.push_back(o.delta_l2);
    linfs.push_back(o.delta_linf);
    std::vector<LabelMap> p1{o.pred_clean}, p2{o.pred_attacked}, t{o.truth};
    pa_c.push_back(pix_acc(p1, t));
    pa_a.push_back(pix_acc(p2, t));
  }
  json agg;
  agg["attack"] = algorithm;
  agg["norm"] = norm_name(norm);
  agg["eps"] = eps;
  agg["steps"] = steps;
  agg["seed"] = seed;
  agg["images"] = n;
  agg["pixacc_clean"] = pix_acc(clean, truth);
  agg["pixacc_attacked"] = pix_acc(attacked, truth);
  agg["pixacc_clean_std"] = std_of(pa_c);
  agg["pixacc_attacked_std"] = std_of(pa_a);
  agg["miou_clean"] = miou(clean, truth, ds.classes);
  agg["miou_attacked"] = miou(attacked, truth, ds.classes);
  agg["mean_queries"] = mean_of(q);
  agg["mean_delta_l1"] = mean_of(l1s);
  agg["mean_delta_l2"] = mean_of(l2s);
  agg["mean_delta_linf"] = mean_of(linfs);
  write_json(out / "aggregate.json", agg);
  write_text(out / "resolved.cfg", cfg.resolved(std::string("crseg attack ") + kBuildVersion));
  std::cout << algorithm << " pixacc clean " << agg["pixacc_clean"] << " attacked " << agg["pixacc_attacked"]
            << " mean queries " << agg["mean_queries"] << "\n";
  return 0;
}

int cmd_regret_lab(Config& cfg, const fs::path& out) {
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  int dims = static_cast<int>(cfg.get_int("dims", 2));
  double radius = cfg.get_num("radius", 1.0);
  std::string t_grid_s = cfg.get_str("t_grid", std::string("1000,10000,100000"));
  std::string gammas_s = cfg.get_str("diag_gammas", std::string("0.0001,0.01,0.1"));
  int diag_samples = static_cast<int>(cfg.get_int("diag_samples", 2000));
  cfg.reject_unknown();

  // Quadratic center: fixed off-origin pattern scaled into the ball.
  std::vector<double> center(dims);
  const double pattern[4] = {0.5, -0.3, 0.25, -0.15};
  for (int i = 0; i < dims; ++i) center[i] = pattern[i % 4] * radius;
  ConvexTestbed quad = ConvexTestbed::quadratic(center, radius);

  std::vector<double> ts, regrets;
  for (const std::string& t_s : split_list(t_grid_s)) {
    int t = std::stoi(t_s);
    RegretSchedule sched = RegretSchedule::theorem(quad, t);
    LabTrace trace = run_regret(quad, t, sched, RandomSource(seed).split(static_cast<std::uint64_t>(t)));
    ts.push_back(static_cast<double>(t));
    regrets.push_back(trace.final_regret);
  }
  double slope = fit_loglog_slope(ts, regrets);

  // Ridge objective |z_1| + 1: positive everywhere, non-differentiable at the
  // ridge, the stress case for probe-based estimators.
  std::vector<std::vector<double>> planes = {std::vector<double>(dims, 0.0), std::vector<double>(dims, 0.0)};
  planes[0][0] = 1.0;
  planes[1][0] = -1.0;
  ConvexTestbed ridge = ConvexTestbed::piecewise_linear(planes, {1.0, 1.0}, radius,
                                                        std::vector<double>(dims, 0.0), 1.0);
  std::vector<double> point(dims, 0.0);
  point[0] = 0.25 * radius;
  if (dims > 1) point[1] = 0.1 * radius;
  std::vector<double> gammas;
  for (const std::string& g : split_list(gammas_s)) gammas.push_back(std::stod(g));
  std::vector<EstimatorDiagnostics> diags =
      estimator_diagnostics(ridge, point, gammas, diag_samples, RandomSource(seed, 77));

  fs::create_directories(out);
  write_text(out / "report.csv", regret_report_csv(ts, regrets, slope, diags));
  json j;
  j["seed"] = seed;
  j["dims"] = dims;
  j["t_grid"] = ts;
  j["regret"] = regrets;
  j["slope"] = slope;
  write_json(out / "regret.json", j);
  write_text(out / "resolved.cfg", cfg.resolved(std::string("crseg regret-lab ") + kBuildVersion));
  std::cout << "regret slope " << slope << " over T grid " << t_grid_s << "\n";
  return 0;
}

int cmd_report(Config& cfg, const fs::path& out) {
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  (void)seed;
  std::vector<std::string> runs = split_list(cfg.get_str("runs"));
  cfg.reject_unknown();
  if (runs.empty()) throw std::runtime_error("report needs at least one run directory");

  std::ostringstream csv;
  csv.precision(10);
  csv << "run,attack,norm,eps,pixacc_clean,pixacc_attacked,miou_clean,miou_attacked,mean_queries\n";
  std::cout << "run  attack  norm  eps  pixacc_clean  pixacc_attacked  miou_clean  miou_attacked  queries\n";
  for (const std::string& run : runs) {
    std::ifstream f(fs::path(run) / "aggregate.json");
    if (!f) throw std::runtime_error("missing aggregate.json under " + run);
    json a = json::parse(f);
    std::string name = fs::path(run).filename().string();
    csv << name << "," << a["attack"].get<std::string>() << "," << a["norm"].get<std::string>() << ","
        << a["eps"].get<double>() << "," << a["pixacc_clean"].get<double>() << ","
        << a["pixacc_attacked"].get<double>() << "," << a["miou_clean"].get<double>() << ","
        << a["miou_attacked"].get<double>() << "," << a["mean_queries"].get<double>() << "\n";
    std::cout << name << "  " << a["attack"].get<std::string>() << "  " << a["norm"].get<std::string>()
              << "  " << a["eps"].get<double>() << "  " << a["pixacc_clean"].get<double>() << "  "
              << a["pixacc_attacked"].get<double>() << "  " << a["miou_clean"].get<double>() << "  "
              << a["miou_attacked"].get<double>() << "  " << a["mean_queries"].get<double>() << "\n";
  }
  fs::create_directories(out);
  write_text(out / "table.csv", csv.str());
  write_text(out / "resolved.cfg", cfg.resolved(std::string("crseg report ") + kBuildVersion));
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"certified-radius-guided attacks on pixel classifiers"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "generate a synthetic segmentation dataset"},
      {"train", "train the toy patch classifier"},
      {"defend", "adversarially train the toy classifier"},
      {"certify", "estimate certified radii and weights per image"},
      {"attack", "run a white/black-box attack over a dataset"},
      {"regret-lab", "verify estimator and regret properties on convex testbeds"},
      {"report", "collate attack aggregates into one table"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "key=value config file")->required();
    sub->add_option("--set", overrides, "override config entries (key=value)");
    sub->add_option("--out", out_dir, "output directory")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Config cfg = Config::from_file(config_path);
    for (const std::string& kv : overrides) cfg.apply_override(kv);
    fs::path out(out_dir);
    std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "gen-data") return cmd_gen_data(cfg, out);
    if (cmd == "train") return cmd_train(cfg, out);
    if (cmd == "defend") return cmd_defend(cfg, out);
    if (cmd == "certify") return cmd_certify(cfg, out);
    if (cmd == "attack") return cmd_attack(cfg, out);
    if (cmd == "regret-lab") return cmd_regret_lab(cfg, out);
    if (cmd == "report") return cmd_report(cfg, out);
    throw std::runtime_error("unhandled command " + cmd);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace crseg::cli
