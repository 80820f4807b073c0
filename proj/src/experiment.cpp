// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "fvr/error.hpp"
#include "fvr/io.hpp"
#include "fvr/sampler.hpp"
#include "fvr/textio.hpp"

namespace fvr {

namespace {

int to_int(const std::string& key, const std::string& v) {
  const long long x = parse_int(v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::kInvalidArgument, key + " out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  const long long x = parse_int(v);
  if (x < 0) throw Error(ErrorCode::kInvalidArgument, key + " must be non-negative");
  return static_cast<std::uint64_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw Error(ErrorCode::kInvalidArgument, key + " expects true/false, got '" + v + "'");
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Key {
  const char* name;
  Setter set;
  Getter get;
};

#define FVR_INT_KEY(NAME, FIELD)                                                       \
  Key {                                                                                \
    NAME, [](ExperimentConfig& c, const std::string& k, const std::string& v) {        \
      c.FIELD = to_int(k, v);                                                          \
    },                                                                                 \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }              \
  }
#define FVR_REAL_KEY(NAME, FIELD)                                                      \
  Key {                                                                                \
    NAME, [](ExperimentConfig& c, const std::string&, const std::string& v) {          \
      c.FIELD = parse_double(v);                                                       \
    },                                                                                 \
        [](const ExperimentConfig& c) { return format_double(c.FIELD); }               \
  }
#define FVR_BOOL_KEY(NAME, FIELD)                                                      \
  Key {                                                                                \
    NAME, [](ExperimentConfig& c, const std::string& k, const std::string& v) {        \
      c.FIELD = to_bool(k, v);                                                         \
    },                                                                                 \
        [](const ExperimentConfig& c) { return std::string(c.FIELD ? "true" : "false"); } \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table{
      Key{"seed", [](ExperimentConfig& c, const std::string& k,
                     const std::string& v) { c.seed = to_seed(k, v); },
          [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      Key{"data_seed", [](ExperimentConfig& c, const std::string& k,
                          const std::string& v) { c.data.data_seed = to_seed(k, v); },
          [](const ExperimentConfig& c) { return std::to_string(c.data.data_seed); }},
      FVR_INT_KEY("n_train", data.n_train),
      FVR_INT_KEY("n_val", data.n_val),
      FVR_INT_KEY("n_test", data.n_test),
      FVR_INT_KEY("volume_size", data.volume_size),
      FVR_REAL_KEY("spacing_mm", data.spacing_mm),
      FVR_INT_KEY("frame_size", data.frame_size),
      FVR_INT_KEY("n_frames", data.n_frames),
      FVR_INT_KEY("crop_d", spec.crop_d),
      FVR_INT_KEY("crop_h", spec.crop_h),
      FVR_INT_KEY("crop_w", spec.crop_w),
      FVR_INT_KEY("frame_range", spec.frame_range),
      FVR_INT_KEY("test_pairs", test_pairs),
      FVR_INT_KEY("benchmark_pairs", benchmark_pairs),
      FVR_INT_KEY("label_stat_pairs", label_stat_pairs),
      Key{"methods",
          [](ExperimentConfig& c, const std::string& k, const std::string& v) {
            std::vector<std::string> names;
            for (const std::string& cell : split(v, ',')) {
              const std::string name(trim(cell));
              if (!is_known_method(name)) {
                throw Error(ErrorCode::kInvalidArgument, k + ": unknown method '" + name + "'");
              }
              names.push_back(name);
            }
            c.methods = std::move(names);
          },
          [](const ExperimentConfig& c) { return join(c.methods, ','); }},
      FVR_INT_KEY("optim_max_iters", optim.max_iters),
      FVR_REAL_KEY("optim_tol", optim.tol),
      Key{"fusion",
          [](ExperimentConfig& c, const std::string&,
             const std::string& v) { c.net.fusion = nn::parse_fusion(v); },
          [](const ExperimentConfig& c) { return std::string(nn::to_string(c.net.fusion)); }},
      Key{"loss_mode",
          [](ExperimentConfig& c, const std::string&,
             const std::string& v) { c.net.loss_mode = nn::parse_loss_mode(v); },
          [](const ExperimentConfig& c) { return std::string(nn::to_string(c.net.loss_mode)); }},
      FVR_REAL_KEY("sim_weight", net.sim_weight),
      FVR_INT_KEY("channels", net.channels),
      FVR_INT_KEY("hidden", net.hidden),
      Key{"pooling",
          [](ExperimentConfig& c, const std::string&,
             const std::string& v) { c.net.pooling = nn::parse_pooling(v); },
          [](const ExperimentConfig& c) { return std::string(nn::to_string(c.net.pooling)); }},
      FVR_BOOL_KEY("standardize", net.standardize),
      FVR_INT_KEY("epochs", train.epochs),
      FVR_INT_KEY("batch_size", train.batch_size),
      FVR_REAL_KEY("lr", train.lr),
      FVR_REAL_KEY("lr_decay", train.lr_decay),
      FVR_INT_KEY("decay_every", train.decay_every),
      FVR_INT_KEY("pairs_per_epoch", train.pairs_per_epoch),
      FVR_INT_KEY("val_pairs", train.val_pairs),
      FVR_BOOL_KEY("augment", train.augment),
      FVR_INT_KEY("max_redraws", train.max_redraws),
  };
  return table;
}

#undef FVR_INT_KEY
#undef FVR_REAL_KEY
#undef FVR_BOOL_KEY

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// ExperimentConfig

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.train.lr = 3e-4;
  c.train.pairs_per_epoch = 4000;
  c.train.val_pairs = 100;
  c.finalize();
  return c;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const Key& k : keys()) {
    if (key == k.name) {
      k.set(*this, key, std::string(trim(value)));
      return;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
}

void ExperimentConfig::apply_file(const std::filesystem::path& path) {
  const std::vector<char> bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(number) + ": expected key=value");
    }
    try {
      set(std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void ExperimentConfig::finalize() {
  net.seed = seed;
  train.seed = seed;
  optim.seed = seed;
  train.frame_range = spec.frame_range;
  net.depth = spec.crop_d;
  net.height = spec.crop_h;
  net.width = spec.crop_w;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
  };
  require(data.n_train >= 1 && data.n_val >= 1 && data.n_test >= 1,
          "every split needs at least one volume");
  require(data.volume_size >= 48, "volume_size must be at least 48");
  require(data.spacing_mm > 0.0, "spacing_mm must be positive");
  require(data.frame_size >= spec.crop_h && data.frame_size >= spec.crop_w,
          "frame_size must cover the crop");
  require(data.n_frames >= 2 * spec.frame_range + 1, "n_frames must cover the frame range");
  require(spec.crop_d >= 1 && spec.crop_h >= 1 && spec.crop_w >= 1, "crop sizes must be positive");
  require(spec.frame_range >= 0, "frame_range must be non-negative");
  require(test_pairs >= 1, "test_pairs must be positive");
  require(benchmark_pairs >= 1, "benchmark_pairs must be positive");
  require(label_stat_pairs >= 2, "label_stat_pairs must be at least 2");
  require(!methods.empty(), "methods must not be empty");
  require(optim.max_iters >= 1 && optim.tol > 0.0, "optimizer settings must be positive");
  net.validate();
  train.validate();
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  for (const Key& k : keys()) out << k.name << '=' << k.get(*this) << '\n';
  out << "# derived: net_seed=" << net.seed << " train_seed=" << train.seed
      << " optim_seed=" << optim.seed << " test_pair_seed=" << test_pair_seed()
      << " volume_seeds=" << data.data_seed << ".." << data.data_seed + data.n_volumes() - 1
      << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Data

Trajectory trajectory_for(int volume_index) {
  return volume_index % 2 == 0 ? Trajectory::kLinear : Trajectory::kFan;
}

SweepDataset make_sweep(const DatasetConfig& cfg, int volume_index) {
  const std::uint64_t seed = cfg.data_seed + static_cast<std::uint64_t>(volume_index);
  const Volume3D v = phantom_generate(seed, cfg.volume_size, cfg.volume_size, cfg.volume_size,
                                      cfg.spacing_mm);
  SweepOptions o;
  o.frame_height = o.frame_width = cfg.frame_size;
  return sweep_simulate(v, seed, cfg.n_frames, trajectory_for(volume_index), o);
}

Dataset generate_dataset(const DatasetConfig& cfg) {
  Dataset ds;
  int index = 0;
  for (int i = 0; i < cfg.n_train; ++i) ds.train.push_back(make_sweep(cfg, index++));
  for (int i = 0; i < cfg.n_val; ++i) ds.val.push_back(make_sweep(cfg, index++));
  for (int i = 0; i < cfg.n_test; ++i) ds.test.push_back(make_sweep(cfg, index++));
  return ds;
}

std::vector<RegistrationPair> test_pairs(const ExperimentConfig& cfg, const Dataset& ds) {
  return nn::sample_pairs(ds.test, cfg.test_pairs, cfg.spec.frame_range, cfg.spec,
                          cfg.test_pair_seed(), cfg.train.max_redraws);
}

LabelStats training_label_stats(const ExperimentConfig& cfg, const Dataset& ds) {
  const std::vector<RegistrationPair> pairs =
      nn::sample_pairs(ds.train, cfg.label_stat_pairs, cfg.spec.frame_range, cfg.spec,
                       cfg.seed + 31, cfg.train.max_redraws);
  std::vector<RigidParams> labels;
  labels.reserve(pairs.size());
  for (const RegistrationPair& p : pairs) labels.push_back(p.label);
  return LabelStats::from_labels(labels);
}

// ---------------------------------------------------------------------------
// Methods

namespace {

bool split_iterative(const std::string& name, Metric& metric, Optimizer& optimizer) {
  const std::size_t plus = name.find('+');
  if (plus == std::string::npos) return false;
  try {
    metric = parse_metric(name.substr(0, plus));
    optimizer = parse_optimizer(name.substr(plus + 1));
  } catch (const Error&) {
    return false;
  }
  return true;
}

}  // namespace

bool is_known_method(const std::string& name) {
  Metric m;
  Optimizer o;
  return name == "identity" || name == "oracle" || name == "random-guess" || name == "fvrnet" ||
         split_iterative(name, m, o);
}

PairMethod make_method(const std::string& name, const MethodContext& ctx) {
  if (name == "identity") return [](const RegistrationPair&) { return RigidParams{}; };
  if (name == "oracle") return [](const RegistrationPair& p) { return p.label; };
  if (name == "random-guess") {
    // Per-call seeds in evaluation order keep the draws reproducible.
    auto counter = std::make_shared<std::uint64_t>(0);
    const LabelStats stats = ctx.label_stats;
    const std::uint64_t seed = ctx.seed;
    return [counter, stats, seed](const RegistrationPair&) {
      return random_guess(stats, seed * 1000003u + (*counter)++);
    };
  }
  if (name == "fvrnet") {
    if (ctx.params == nullptr) {
      throw Error(ErrorCode::kInvalidArgument, "method fvrnet needs trained parameters");
    }
    const nn::NetParams* params = ctx.params;
    const nn::FvrNetConfig net = ctx.net;
    return [params, net](const RegistrationPair& p) {
      return nn::infer(p.frame, p.subvolume, *params, net).theta;
    };
  }
  OptimConfig cfg = ctx.optim;
  if (!split_iterative(name, cfg.metric, cfg.optimizer)) {
    throw Error(ErrorCode::kInvalidArgument, "unknown method '" + name + "'");
  }
  return [cfg](const RegistrationPair& p) {
    return register_iterative(p.frame, p.subvolume, RigidParams{}, cfg).theta_est;
  };
}

// ---------------------------------------------------------------------------
// Ablation

std::vector<AblationVariant> ablation_variants() {
  using nn::Fusion;
  using nn::LossMode;
  return {
      {"L_trans", Fusion::kDualBalanced, LossMode::kTrans},
      {"L_sim", Fusion::kDualBalanced, LossMode::kSim},
      {"EF", Fusion::kEarlyFusion, LossMode::kBoth},
      {"ULF", Fusion::kUnbalancedLate, LossMode::kBoth},
      {"L_trans+L_sim", Fusion::kDualBalanced, LossMode::kBoth},
  };
}

nn::FvrNetConfig variant_config(const ExperimentConfig& cfg, const AblationVariant& v) {
  nn::FvrNetConfig net = cfg.net;
  net.fusion = v.fusion;
  net.loss_mode = v.loss_mode;
  return net;
}

std::string reports_csv(const std::vector<EvalReport>& reports, bool with_init_line) {
  std::string out;
  if (with_init_line && !reports.empty()) {
    out += "# initialization_dist_err_mm," + format_double(reports.front().init_dist_err_mm) +
           '\n';
  }
  out += EvalReport::csv_header();
  out += '\n';
  for (const EvalReport& r : reports) out += r.csv_row() + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark

std::string BenchmarkReport::to_json() const {
  nlohmann::ordered_json j;
  j["methods"] = nlohmann::ordered_json::array();
  for (const BenchmarkEntry& e : entries) {
    nlohmann::ordered_json m;
    m["method"] = e.method;
    m["n_pairs"] = e.n_pairs;
    m["mean_s"] = number_or_null(e.mean_s);
    m["median_s"] = number_or_null(e.median_s);
    j["methods"].push_back(m);
  }
  j["speedups"] = nlohmann::ordered_json::object();
  for (const auto& [name, ratio] : speedups) j["speedups"][name] = number_or_null(ratio);
  return j.dump(2) + '\n';
}

BenchmarkReport run_benchmark(const std::vector<std::string>& methods, const MethodContext& ctx,
                              const std::vector<RegistrationPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyBatch, "benchmark needs pairs");
  BenchmarkReport report;
  for (const std::string& name : methods) {
    const PairMethod method = make_method(name, ctx);
    method(pairs.front());  // warm-up, untimed
    std::vector<double> times;
    times.reserve(pairs.size());
    for (const RegistrationPair& p : pairs) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        method(p);
      } catch (const Error&) {
        continue;
      }
      times.push_back(seconds_since(t0));
    }
    BenchmarkEntry e;
    e.method = name;
    e.n_pairs = static_cast<int>(times.size());
    if (!times.empty()) {
      double sum = 0.0;
      for (double t : times) sum += t;
      e.mean_s = sum / static_cast<double>(times.size());
      std::vector<double> sorted = times;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      e.median_s = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    } else {
      e.mean_s = e.median_s = std::numeric_limits<double>::quiet_NaN();
    }
    report.entries.push_back(e);
  }
  const auto net = std::find_if(report.entries.begin(), report.entries.end(),
                                [](const BenchmarkEntry& e) { return e.method == "fvrnet"; });
  if (net != report.entries.end()) {
    for (const BenchmarkEntry& e : report.entries) {
      Metric m;
      Optimizer o;
      if (split_iterative(e.method, m, o)) {
        report.speedups.emplace_back(e.method + "/fvrnet", e.mean_s / net->mean_s);
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Single-pair registration

const char* RegisterRow::csv_header() {
  return "method,frame_index,init_index,est_tx,est_ty,est_tz,est_ax,est_ay,est_az,"
         "label_tx,label_ty,label_tz,label_ax,label_ay,label_az,dist_err_mm,img_sim_ncc,"
         "runtime_s";
}

std::string RegisterRow::csv_row() const {
  std::ostringstream out;
  out << method << ',' << frame_index << ',' << init_index;
  for (std::size_t k = 0; k < 6; ++k) out << ',' << format_double(estimate[k]);
  for (std::size_t k = 0; k < 6; ++k) out << ',' << format_double(label[k]);
  out << ',' << format_double(dist_err_mm) << ',' << format_double(img_sim_ncc) << ','
      << format_double(runtime_s);
  return out.str();
}

RegisterRow RegisterRow::from_csv_row(const std::string& row) {
  const auto cells = split(trim(row), ',');
  if (cells.size() != 18) {
    throw Error(ErrorCode::kDimensionMismatch, "register row needs 18 cells");
  }
  RegisterRow r;
  r.method = cells[0];
  r.frame_index = static_cast<int>(parse_int(cells[1]));
  r.init_index = static_cast<int>(parse_int(cells[2]));
  for (std::size_t k = 0; k < 6; ++k) {
    r.estimate[k] = parse_double(cells[3 + k]);
    r.label[k] = parse_double(cells[9 + k]);
  }
  r.dist_err_mm = parse_double(cells[15]);
  r.img_sim_ncc = parse_double(cells[16]);
  r.runtime_s = parse_double(cells[17]);
  return r;
}

RegisterRow register_pair(const RegistrationPair& pair, const std::string& method,
                          const MethodContext& ctx) {
  const PairMethod fn = make_method(method, ctx);
  RegisterRow row;
  row.method = method;
  row.frame_index = pair.frame_index;
  row.init_index = pair.init_index;
  row.label = pair.label;
  const auto t0 = std::chrono::steady_clock::now();
  row.estimate = fn(pair);
  row.runtime_s = seconds_since(t0);
  const Frame2D& f = pair.frame;
  row.dist_err_mm = corner_distance_error(row.estimate, pair.label, f.height, f.width, f.spacing);
  const SampledSlice s = sample_slice(pair.subvolume, row.estimate, f.height, f.width, f.spacing);
  try {
    row.img_sim_ncc = ncc_masked(f.as_double(), s.values, s.inside);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kZeroVariance) throw;
    row.img_sim_ncc = std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

std::string panels_pgm(const RegistrationPair& pair, const RigidParams& estimate) {
  const Frame2D& f = pair.frame;
  const int h = f.height, w = f.width;
  const std::vector<double> panels[4] = {
      sample_slice(pair.subvolume, RigidParams{}, h, w, f.spacing).values,
      f.as_double(),
      sample_slice(pair.subvolume, pair.label, h, w, f.spacing).values,
      sample_slice(pair.subvolume, estimate, h, w, f.spacing).values,
  };
  double lo = panels[0][0], hi = panels[0][0];
  for (const auto& p : panels) {
    for (double x : p) lo = std::min(lo, x), hi = std::max(hi, x);
  }
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::string out = "P5\n" + std::to_string(4 * w) + ' ' + std::to_string(h) + "\n255\n";
  for (int i = 0; i < h; ++i) {
    for (const auto& p : panels) {
      for (int j = 0; j < w; ++j) {
        const double v = std::round((p[static_cast<std::size_t>(i) * w + j] - lo) * scale);
        out += static_cast<char>(static_cast<unsigned char>(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

std::string directory_digest(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(data[i]);
      h *= 0x100000001b3ull;
    }
  };
  for (const fs::path& p : files) {
    const std::string rel = fs::relative(p, dir).generic_string();
    mix(rel.data(), rel.size() + 1);
    const std::vector<char> bytes = read_file(p);
    mix(bytes.data(), bytes.size());
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace fvr
