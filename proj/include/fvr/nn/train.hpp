// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_NN_TRAIN_HPP_
#define FVR_NN_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fvr/nn/model.hpp"
#include "fvr/phantom.hpp"
#include "fvr/subvolume.hpp"

namespace fvr::nn {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 8;
  double lr = 1e-3;
  double lr_decay = 0.9;  // multiplied in every decay_every epochs
  int decay_every = 5;
  int frame_range = 10;   // init frame drawn from [n - R, n + R]
  int pairs_per_epoch = 2000;
  int val_pairs = 200;
  /// Random axis flips and in-plane transposes applied per training sample.
  bool augment = true;
  /// Redraws per sample after an out-of-bounds crop before it is skipped.
  int max_redraws = 20;
  std::uint64_t seed = 0;

  /// Throws Error(kInvalidArgument).
  void validate() const;
};

struct TrainLogRow {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_dist_err_mm = 0.0;
};

/// "epoch,lr,train_loss,val_loss,val_dist_err_mm" then one row per epoch.
std::string training_log_csv(const std::vector<TrainLogRow>& rows);

struct TrainResult {
  NetParams params;
  std::vector<TrainLogRow> log;
  int skipped_samples = 0;
  double wall_time_s = 0.0;
};

/// Draws a target frame n uniformly, then an init frame uniformly in
/// [n - R, n + R] clipped to the sweep, and builds the pair. Crops leaving the
/// volume are redrawn up to max_redraws times, then skipped.
class PairSampler {
 public:
  PairSampler(const std::vector<SweepDataset>& sweeps, int frame_range, SubvolumeSpec spec,
              std::uint64_t seed, int max_redraws = 20);

  /// Returns false when the draw was skipped.
  bool draw(RegistrationPair& out);
  int skipped() const { return skipped_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  const std::vector<SweepDataset>& sweeps_;
  int range_;
  SubvolumeSpec spec_;
  std::mt19937_64 rng_;
  int max_redraws_;
  int skipped_ = 0;
};

/// Deterministic pair list; skipped draws are not replaced.
std::vector<RegistrationPair> sample_pairs(const std::vector<SweepDataset>& sweeps, int count,
                                           int frame_range, const SubvolumeSpec& spec,
                                           std::uint64_t seed, int max_redraws = 20);

/// Reflections of the subvolume frame that map the grid onto itself.
struct Symmetry {
  bool flip_x = false;
  bool flip_y = false;
  bool flip_z = false;
  bool swap_xy = false;  // needs square frames

  static Symmetry from_code(unsigned code);  // low 4 bits
};

/// Applies q to the images and conjugates the label so that resampling the
/// new subvolume at the new label still reproduces the new frame.
void apply_symmetry(const Symmetry& q, Frame2D& frame, Volume3D& subvolume, RigidParams& label);

using EpochCallback = std::function<void(const TrainLogRow&)>;

/// Mini-batch Adam over freshly sampled pairs each epoch; gradients are
/// averaged over the batch in index order. Deterministic per seeds.
TrainResult train(const std::vector<SweepDataset>& train_sweeps,
                  const std::vector<SweepDataset>& val_sweeps, const FvrNetConfig& net_cfg,
                  const TrainConfig& cfg, const SubvolumeSpec& spec,
                  const EpochCallback& on_epoch = {});

struct ValidationStats {
  double loss = 0.0;
  double dist_err_mm = 0.0;
};

ValidationStats validate(const std::vector<RegistrationPair>& pairs, const NetParams& params,
                         const FvrNetConfig& cfg);

struct Inference {
  RigidParams theta;
  double wall_time_s = 0.0;
};

/// One timed forward pass.
Inference infer(const Frame2D& frame, const Volume3D& subvolume, const NetParams& params,
                const FvrNetConfig& cfg);

}  // namespace fvr::nn

#endif  // FVR_NN_TRAIN_HPP_
