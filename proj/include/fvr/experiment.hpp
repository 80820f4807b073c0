// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_EXPERIMENT_HPP_
#define FVR_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fvr/metrics.hpp"
#include "fvr/nn/model.hpp"
#include "fvr/nn/train.hpp"
#include "fvr/optim.hpp"
#include "fvr/phantom.hpp"
#include "fvr/subvolume.hpp"

namespace fvr {

/// Synthetic data: one phantom and one sweep per volume index. Indices
/// [0, n_train) train, the next n_val validate, the last n_test test, so the
/// splits are disjoint and cover every volume. Volume i uses seed data_seed + i
/// and a linear sweep for even i, a fan sweep for odd i.
struct DatasetConfig {
  int n_train = 50;
  int n_val = 10;
  int n_test = 10;
  std::uint64_t data_seed = 1000;
  int volume_size = 48;  // cube edge in voxels
  double spacing_mm = 2.0;
  int frame_size = 36;   // rendered frames; cropped to crop_h x crop_w for pairs
  int n_frames = 61;

  int n_volumes() const { return n_train + n_val + n_test; }
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DatasetConfig data;
  SubvolumeSpec spec{8, 32, 32, 10, 0.0};
  /// Test pairs for eval; benchmark uses the first benchmark_pairs of them.
  int test_pairs = 200;
  int benchmark_pairs = 50;
  /// Training pairs used for the random-guess label statistics.
  int label_stat_pairs = 2000;
  std::vector<std::string> methods{"identity",  "random-guess", "mse+gd",
                                   "mse+powell", "ncc+gd",       "ncc+powell"};
  OptimConfig optim;
  nn::FvrNetConfig net;
  nn::TrainConfig train;
  std::filesystem::path out_dir = ".";

  /// Desk-scale settings sized so a full ablation runs on one CPU core.
  static ExperimentConfig defaults();

  /// Applies one key=value setting. Throws Error(kInvalidArgument) for
  /// unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  /// Reads key=value lines; blank lines and text after '#' are ignored.
  void apply_file(const std::filesystem::path& path);
  /// Propagates seed to every derived seed and syncs the shared geometry.
  void finalize();
  void validate() const;
  /// Every key in set() form, with derived seeds listed as comments.
  std::string to_text() const;

  std::uint64_t test_pair_seed() const { return seed + 77; }
};

struct Dataset {
  std::vector<SweepDataset> train;
  std::vector<SweepDataset> val;
  std::vector<SweepDataset> test;
};

Trajectory trajectory_for(int volume_index);
SweepDataset make_sweep(const DatasetConfig& cfg, int volume_index);
Dataset generate_dataset(const DatasetConfig& cfg);

/// Fixed evaluation pairs: every method sees the same targets and inits.
std::vector<RegistrationPair> test_pairs(const ExperimentConfig& cfg, const Dataset& ds);

/// Label statistics over pairs sampled from the training split.
LabelStats training_label_stats(const ExperimentConfig& cfg, const Dataset& ds);

/// Registration methods by name: identity, oracle, random-guess,
/// {mse,ncc}+{gd,powell}, fvrnet. The net method needs params.
struct MethodContext {
  OptimConfig optim;
  LabelStats label_stats;
  std::uint64_t seed = 0;
  const nn::NetParams* params = nullptr;
  nn::FvrNetConfig net;
};

PairMethod make_method(const std::string& name, const MethodContext& ctx);
bool is_known_method(const std::string& name);

/// One ablation row: a network variant trained with shared seeds.
struct AblationVariant {
  std::string name;
  nn::Fusion fusion;
  nn::LossMode loss_mode;
};

/// L_trans, L_sim, EF, ULF, then the full dual-branch net with both losses.
std::vector<AblationVariant> ablation_variants();

nn::FvrNetConfig variant_config(const ExperimentConfig& cfg, const AblationVariant& v);

/// Table-shaped CSV: optional comment line with the initialization error,
/// the report header, then one row per report.
std::string reports_csv(const std::vector<EvalReport>& reports, bool with_init_line = true);

/// Per-method wall times over the same pairs.
struct BenchmarkEntry {
  std::string method;
  double mean_s = 0.0;
  double median_s = 0.0;
  int n_pairs = 0;
};

struct BenchmarkReport {
  std::vector<BenchmarkEntry> entries;
  /// Named "<baseline>/<method>" ratios of mean times, for every iterative
  /// baseline against the net.
  std::vector<std::pair<std::string, double>> speedups;
  std::string to_json() const;
};

BenchmarkReport run_benchmark(const std::vector<std::string>& methods, const MethodContext& ctx,
                              const std::vector<RegistrationPair>& pairs);

/// Single-pair registration record printed by the register command.
struct RegisterRow {
  std::string method;
  int frame_index = 0;
  int init_index = 0;
  RigidParams estimate;
  RigidParams label;
  double dist_err_mm = 0.0;
  double img_sim_ncc = 0.0;
  double runtime_s = 0.0;

  static const char* csv_header();
  std::string csv_row() const;
  static RegisterRow from_csv_row(const std::string& row);
};

RegisterRow register_pair(const RegistrationPair& pair, const std::string& method,
                          const MethodContext& ctx);

/// Four panels side by side: init slice, input frame, ground-truth slice and
/// predicted slice, as an 8-bit binary PGM scaled to [0, 255].
std::string panels_pgm(const RegistrationPair& pair, const RigidParams& estimate);

/// FNV-1a 64-bit digest, in hex, of the relative paths and contents of every
/// regular file under dir, visited in path order.
std::string directory_digest(const std::filesystem::path& dir);

}  // namespace fvr

#endif  // FVR_EXPERIMENT_HPP_
