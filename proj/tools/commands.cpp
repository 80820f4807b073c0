// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "fvr/error.hpp"
#include "fvr/experiment.hpp"
#include "fvr/io.hpp"
#include "fvr/textio.hpp"

namespace fvr::cli {

namespace fs = std::filesystem;

namespace {

// Raised for bad flags or configuration; maps to kExitUsage.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir = ".";
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig c = ExperimentConfig::defaults();
  try {
    if (!g.config.empty()) c.apply_file(g.config);
    if (g.seed_given) c.seed = g.seed;
    c.out_dir = g.out_dir;
    c.finalize();
    c.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

// Writes a table and echoes it.
void emit(const fs::path& path, const std::string& text, std::ostream& out) {
  write_text(path, text);
  out << text << std::flush;
}

std::string indexed_name(const char* stem, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d%s", stem, i, ext);
  return buf;
}

Dataset make_dataset(const ExperimentConfig& cfg, std::ostream& err) {
  err << "generating " << cfg.data.n_volumes() << " synthetic sweeps\n";
  return generate_dataset(cfg.data);
}

nn::TrainResult train_variant(const ExperimentConfig& cfg, const Dataset& ds,
                              const nn::FvrNetConfig& net, const std::string& label,
                              std::ostream& err) {
  return nn::train(ds.train, ds.val, net, cfg.train, cfg.spec, [&](const nn::TrainLogRow& r) {
    err << label << " epoch " << r.epoch << " lr " << format_double(r.lr) << " train "
        << format_double(r.train_loss) << " val " << format_double(r.val_loss) << " dist "
        << format_double(r.val_dist_err_mm) << '\n'
        << std::flush;
  });
}

bool wants(const std::vector<std::string>& methods, const std::string& name) {
  return std::find(methods.begin(), methods.end(), name) != methods.end();
}

std::vector<std::string> parse_methods(const std::string& list) {
  std::vector<std::string> names;
  for (const std::string& cell : split(list, ',')) {
    const std::string name(trim(cell));
    if (!is_known_method(name)) throw UsageError("unknown method '" + name + "'");
    names.push_back(name);
  }
  return names;
}

// ---------------------------------------------------------------------------

struct PhantomArgs {
  int count = 1;
  int size = 0;
  double spacing = 0.0;
};

void cmd_phantom(const ExperimentConfig& cfg, const PhantomArgs& a, std::ostream& out) {
  const int size = a.size > 0 ? a.size : cfg.data.volume_size;
  const double spacing = a.spacing > 0.0 ? a.spacing : cfg.data.spacing_mm;
  fs::create_directories(cfg.out_dir);
  std::string table = "index,seed,path\n";
  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
    const std::string name = indexed_name("phantom", i, ".fvr");
    save_volume(phantom_generate(seed, size, size, size, spacing), cfg.out_dir / name);
    table += std::to_string(i) + ',' + std::to_string(seed) + ',' + name + '\n';
  }
  emit(cfg.out_dir / "phantoms.csv", table, out);
}

struct SweepArgs {
  std::string volume;
  std::string trajectory = "linear";
  std::string name = "sweep";
  int frames = 0;
  int frame_size = 0;
};

void cmd_sweep(const ExperimentConfig& cfg, const SweepArgs& a, std::ostream& out) {
  const Volume3D v = load_volume(a.volume);
  SweepOptions o;
  o.frame_height = o.frame_width = a.frame_size > 0 ? a.frame_size : cfg.data.frame_size;
  const int frames = a.frames > 0 ? a.frames : cfg.data.n_frames;
  const SweepDataset ds = sweep_simulate(v, cfg.seed, frames, parse_trajectory(a.trajectory), o);
  const fs::path dir = cfg.out_dir / a.name;
  save_sweep(ds, dir);
  const std::vector<char> poses = read_file(dir / "poses.csv");
  out << std::string(poses.begin(), poses.end()) << std::flush;
}

struct RegisterArgs {
  std::string sweep;
  int frame = 0;
  int init_offset = 0;
  std::string method = "mse+powell";
  std::string params;
};

void cmd_register(const ExperimentConfig& cfg, const RegisterArgs& a, std::ostream& out) {
  const SweepDataset ds = load_sweep(a.sweep);
  if (std::abs(a.init_offset) > cfg.spec.frame_range) {
    throw Error(ErrorCode::kInvalidArgument, "init offset exceeds frame_range");
  }
  const int init = a.frame + a.init_offset;
  const int n = static_cast<int>(ds.size());
  if (a.frame < 0 || a.frame >= n || init < 0 || init >= n) {
    throw Error(ErrorCode::kOutOfBounds, "frame or init index outside the sweep");
  }
  const RegistrationPair pair = make_pair(ds, a.frame, init, cfg.spec);

  MethodContext ctx;
  ctx.optim = cfg.optim;
  ctx.seed = cfg.seed;
  ctx.net = cfg.net;
  nn::NetParams params;
  if (!a.params.empty()) {
    params = nn::NetParams::load(a.params);
    ctx.params = &params;
  }
  if (a.method == "random-guess") {
    const auto pool = nn::sample_pairs({ds}, cfg.label_stat_pairs, cfg.spec.frame_range,
                                       cfg.spec, cfg.seed + 31, cfg.train.max_redraws);
    std::vector<RigidParams> labels;
    for (const RegistrationPair& p : pool) labels.push_back(p.label);
    ctx.label_stats = LabelStats::from_labels(labels);
  }
  const RegisterRow row = register_pair(pair, a.method, ctx);
  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir / "register_panels.pgm", panels_pgm(pair, row.estimate));
  emit(cfg.out_dir / "register.csv",
       std::string(RegisterRow::csv_header()) + '\n' + row.csv_row() + '\n', out);
}

void cmd_train(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const Dataset ds = make_dataset(cfg, err);
  const nn::TrainResult r = train_variant(cfg, ds, cfg.net, "train", err);
  fs::create_directories(cfg.out_dir);
  r.params.save(cfg.out_dir / "params.bin");
  write_text(cfg.out_dir / "config.txt", cfg.to_text());
  emit(cfg.out_dir / "training_log.csv", nn::training_log_csv(r.log), out);
}

void cmd_ablate(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const Dataset ds = make_dataset(cfg, err);
  const std::vector<RegistrationPair> pairs = test_pairs(cfg, ds);
  fs::create_directories(cfg.out_dir);
  std::vector<EvalReport> reports;
  for (const AblationVariant& v : ablation_variants()) {
    const nn::FvrNetConfig net = variant_config(cfg, v);
    const nn::TrainResult r = train_variant(cfg, ds, net, v.name, err);
    r.params.save(cfg.out_dir / ("params_" + v.name + ".bin"));
    write_text(cfg.out_dir / ("training_log_" + v.name + ".csv"), nn::training_log_csv(r.log));
    MethodContext ctx;
    ctx.params = &r.params;
    ctx.net = net;
    reports.push_back(evaluate_pairs(v.name, make_method("fvrnet", ctx), pairs));
  }
  write_text(cfg.out_dir / "config.txt", cfg.to_text());
  emit(cfg.out_dir / "ablation.csv", reports_csv(reports), out);
}

MethodContext method_context(const ExperimentConfig& cfg, const Dataset& ds,
                             const std::vector<std::string>& methods,
                             const std::string& params_path, nn::NetParams& params) {
  MethodContext ctx;
  ctx.optim = cfg.optim;
  ctx.seed = cfg.seed;
  ctx.net = cfg.net;
  if (wants(methods, "fvrnet")) {
    params = nn::NetParams::load(params_path);
    ctx.params = &params;
  }
  if (wants(methods, "random-guess")) ctx.label_stats = training_label_stats(cfg, ds);
  return ctx;
}

void cmd_eval(const ExperimentConfig& cfg, const std::vector<std::string>& methods,
              const std::string& params_path, std::ostream& out, std::ostream& err) {
  const Dataset ds = make_dataset(cfg, err);
  const std::vector<RegistrationPair> pairs = test_pairs(cfg, ds);
  nn::NetParams params;
  const MethodContext ctx = method_context(cfg, ds, methods, params_path, params);
  std::vector<EvalReport> reports;
  for (const std::string& name : methods) {
    err << "evaluating " << name << " on " << pairs.size() << " pairs\n" << std::flush;
    reports.push_back(evaluate_pairs(name, make_method(name, ctx), pairs));
  }
  fs::create_directories(cfg.out_dir);
  emit(cfg.out_dir / "eval.csv", reports_csv(reports), out);
}

void cmd_benchmark(ExperimentConfig cfg, const std::vector<std::string>& methods,
                   const std::string& params_path, std::ostream& out, std::ostream& err) {
  cfg.test_pairs = cfg.benchmark_pairs;
  const Dataset ds = make_dataset(cfg, err);
  const std::vector<RegistrationPair> pairs = test_pairs(cfg, ds);
  nn::NetParams params;
  const MethodContext ctx = method_context(cfg, ds, methods, params_path, params);
  const BenchmarkReport report = run_benchmark(methods, ctx, pairs);
  fs::create_directories(cfg.out_dir);
  emit(cfg.out_dir / "benchmark.json", report.to_json(), out);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frame-to-volume registration toolkit", "fvr"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed")
      ->each([&g](const std::string&) { g.seed_given = true; });
  app.add_option("--out-dir", g.out_dir, "output directory");

  PhantomArgs phantom;
  auto* c_phantom = app.add_subcommand("phantom", "write synthetic phantom volumes");
  c_phantom->add_option("--count", phantom.count, "number of volumes")->check(CLI::PositiveNumber);
  c_phantom->add_option("--size", phantom.size, "cube edge in voxels")->check(CLI::PositiveNumber);
  c_phantom->add_option("--spacing", phantom.spacing, "voxel spacing (mm)")
      ->check(CLI::PositiveNumber);

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "simulate a freehand sweep through a volume");
  c_sweep->add_option("--volume", sweep.volume, "input volume file")->required();
  c_sweep->add_option("--trajectory", sweep.trajectory, "linear or fan")
      ->check(CLI::IsMember({"linear", "fan"}));
  c_sweep->add_option("--frames", sweep.frames, "frame count")->check(CLI::PositiveNumber);
  c_sweep->add_option("--frame-size", sweep.frame_size, "frame edge in pixels")
      ->check(CLI::PositiveNumber);
  c_sweep->add_option("--name", sweep.name, "output sweep directory name");

  RegisterArgs reg;
  auto* c_register = app.add_subcommand("register", "register one frame of a sweep");
  c_register->add_option("--sweep", reg.sweep, "sweep directory")->required();
  c_register->add_option("--frame", reg.frame, "target frame index")->required();
  c_register->add_option("--init-offset", reg.init_offset, "init frame minus target frame");
  c_register->add_option("--method", reg.method, "registration method");
  c_register->add_option("--params", reg.params, "network parameter file");

  auto* c_train = app.add_subcommand("train", "train the registration network");

  auto* c_ablate = app.add_subcommand("ablate", "train and evaluate the ablation variants");

  std::string eval_methods, eval_params;
  auto* c_eval = app.add_subcommand("eval", "compare registration methods on the test split");
  c_eval->add_option("--methods", eval_methods, "comma-separated method names");
  c_eval->add_option("--params", eval_params, "network parameter file for fvrnet");

  std::string bench_methods = "mse+gd,mse+powell,ncc+gd,ncc+powell,fvrnet", bench_params;
  auto* c_bench = app.add_subcommand("benchmark", "time registration methods");
  c_bench->add_option("--methods", bench_methods, "comma-separated method names");
  c_bench->add_option("--params", bench_params, "network parameter file for fvrnet");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  ExperimentConfig cfg;
  std::vector<std::string> methods;
  try {
    cfg = load_config(g);
    if (*c_eval) methods = eval_methods.empty() ? cfg.methods : parse_methods(eval_methods);
    if (*c_bench) methods = parse_methods(bench_methods);
    const std::string& params = *c_eval ? eval_params : bench_params;
    if ((*c_eval || *c_bench) && wants(methods, "fvrnet") && params.empty()) {
      throw UsageError("method fvrnet needs --params");
    }
    if (*c_register && !is_known_method(reg.method)) {
      throw UsageError("unknown method '" + reg.method + "'");
    }
    if (*c_register && reg.method == "fvrnet" && reg.params.empty()) {
      throw UsageError("method fvrnet needs --params");
    }
  } catch (const UsageError& e) {
    err << "fvr: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*c_phantom) cmd_phantom(cfg, phantom, out);
    if (*c_sweep) cmd_sweep(cfg, sweep, out);
    if (*c_register) cmd_register(cfg, reg, out);
    if (*c_train) cmd_train(cfg, out, err);
    if (*c_ablate) cmd_ablate(cfg, out, err);
    if (*c_eval) cmd_eval(cfg, methods, eval_params, out, err);
    if (*c_bench) cmd_benchmark(cfg, methods, bench_params, out, err);
  } catch (const std::exception& e) {
    err << "fvr: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace fvr::cli
