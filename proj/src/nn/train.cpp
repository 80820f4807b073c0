// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/nn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>

#include "fvr/error.hpp"
#include "fvr/metrics.hpp"
#include "fvr/textio.hpp"

namespace fvr::nn {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kValidationSeedOffset = 0x9e3779b97f4a7c15ull;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Reorders a row-major H x W plane in place by the given symmetry.
void transform_plane(const Symmetry& q, float* plane, int h, int w, std::vector<float>& scratch) {
  scratch.assign(plane, plane + static_cast<std::size_t>(h) * w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      // Destination (i, j) reads the source after transpose then flips.
      int si = q.flip_y ? h - 1 - i : i;
      int sj = q.flip_x ? w - 1 - j : j;
      if (q.swap_xy) std::swap(si, sj);
      plane[static_cast<std::size_t>(i) * w + j] = scratch[static_cast<std::size_t>(si) * w + sj];
    }
  }
}

void add_scaled(NetParams& acc, const NetParams& g, double s) {
  for (std::size_t t = 0; t < acc.size(); ++t) {
    Tensor& a = acc.tensors()[t].value;
    const Tensor& b = g.tensors()[t].value;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || pairs_per_epoch < 1 || val_pairs < 0 || decay_every < 1 ||
      frame_range < 0 || max_redraws < 0) {
    throw Error(ErrorCode::kInvalidArgument, "training counts must be positive");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be finite and >= 0");
  }
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lr_decay must lie in (0, 1]");
  }
}

std::string training_log_csv(const std::vector<TrainLogRow>& rows) {
  std::ostringstream os;
  os << "epoch,lr,train_loss,val_loss,val_dist_err_mm\n";
  for (const auto& r : rows) {
    os << r.epoch << ',' << format_double(r.lr) << ',' << format_double(r.train_loss) << ','
       << format_double(r.val_loss) << ',' << format_double(r.val_dist_err_mm) << '\n';
  }
  return os.str();
}

PairSampler::PairSampler(const std::vector<SweepDataset>& sweeps, int frame_range,
                         SubvolumeSpec spec, std::uint64_t seed, int max_redraws)
    : sweeps_(sweeps), range_(frame_range), spec_(spec), rng_(seed), max_redraws_(max_redraws) {
  if (sweeps_.empty()) throw Error(ErrorCode::kEmptyBatch, "no sweeps to sample pairs from");
  for (const auto& s : sweeps_) {
    if (s.size() < 2) throw Error(ErrorCode::kTooSmall, "sweep has fewer than two frames");
  }
}

bool PairSampler::draw(RegistrationPair& out) {
  for (int attempt = 0; attempt <= max_redraws_; ++attempt) {
    const auto s = std::uniform_int_distribution<std::size_t>(0, sweeps_.size() - 1)(rng_);
    const SweepDataset& ds = sweeps_[s];
    const int count = static_cast<int>(ds.size());
    const int n = std::uniform_int_distribution<int>(0, count - 1)(rng_);
    const int lo = std::max(0, n - range_), hi = std::min(count - 1, n + range_);
    const int init = std::uniform_int_distribution<int>(lo, hi)(rng_);
    try {
      out = make_pair(ds, n, init, spec_);
      return true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kOutOfBounds) throw;
    }
  }
  ++skipped_;
  return false;
}

std::vector<RegistrationPair> sample_pairs(const std::vector<SweepDataset>& sweeps, int count,
                                           int frame_range, const SubvolumeSpec& spec,
                                           std::uint64_t seed, int max_redraws) {
  PairSampler sampler(sweeps, frame_range, spec, seed, max_redraws);
  std::vector<RegistrationPair> pairs;
  pairs.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) {
    RegistrationPair p;
    if (sampler.draw(p)) pairs.push_back(std::move(p));
  }
  return pairs;
}

Symmetry Symmetry::from_code(unsigned code) {
  return {(code & 1u) != 0, (code & 2u) != 0, (code & 4u) != 0, (code & 8u) != 0};
}

void apply_symmetry(const Symmetry& q, Frame2D& frame, Volume3D& subvolume, RigidParams& label) {
  if (q.swap_xy && (frame.height != frame.width || subvolume.height != subvolume.width)) {
    throw Error(ErrorCode::kShapeMismatch, "in-plane transpose needs square images");
  }
  std::vector<float> scratch;
  transform_plane(q, frame.pixels.data(), frame.height, frame.width, scratch);
  const std::size_t plane = static_cast<std::size_t>(subvolume.height) * subvolume.width;
  for (int k = 0; k < subvolume.depth; ++k) {
    transform_plane(q, subvolume.voxels.data() + k * plane, subvolume.height, subvolume.width,
                    scratch);
  }
  if (q.flip_z) {
    for (int k = 0; k < subvolume.depth / 2; ++k) {
      std::swap_ranges(subvolume.voxels.begin() + static_cast<std::ptrdiff_t>(k * plane),
                       subvolume.voxels.begin() + static_cast<std::ptrdiff_t>((k + 1) * plane),
                       subvolume.voxels.begin() +
                           static_cast<std::ptrdiff_t>((subvolume.depth - 1 - k) * plane));
    }
  }
  // New images read the old ones at Q^T p, so the pose conjugates by Q.
  Mat3 perm = Mat3::Identity();
  if (q.swap_xy) perm << 0, 1, 0, 1, 0, 0, 0, 0, 1;
  const Vec3 signs(q.flip_x ? -1.0 : 1.0, q.flip_y ? -1.0 : 1.0, q.flip_z ? -1.0 : 1.0);
  const Mat3 reflect = signs.asDiagonal() * perm;
  const HomTransform m = params_to_matrix(label);
  label = matrix_to_params(HomTransform::from_rotation_translation(
      reflect * m.rotation() * reflect.transpose(), reflect * m.translation()));
}

ValidationStats validate(const std::vector<RegistrationPair>& pairs, const NetParams& params,
                         const FvrNetConfig& cfg) {
  ValidationStats st;
  if (pairs.empty()) {
    st.loss = st.dist_err_mm = std::numeric_limits<double>::quiet_NaN();
    return st;
  }
  const double w = cfg.effective_sim_weight();
  for (const auto& p : pairs) {
    const NetInput in = prepare_input(p.frame, p.subvolume, cfg);
    const RigidParams pred = forward(in, params, cfg);
    const std::span<const RigidParams> ps(&pred, 1), ls(&p.label, 1);
    double loss = cfg.uses_trans_loss() ? loss_trans(ps, ls) : 0.0;
    if (w > 0.0) {
      const SimLoss s = loss_sim(std::span<const Frame2D>(&p.frame, 1),
                                 std::span<const Volume3D>(&p.subvolume, 1), ps);
      loss += w * s.value / (in.scale * in.scale);
    }
    st.loss += loss;
    st.dist_err_mm +=
        corner_distance_error(pred, p.label, p.frame.height, p.frame.width, p.frame.spacing);
  }
  st.loss /= static_cast<double>(pairs.size());
  st.dist_err_mm /= static_cast<double>(pairs.size());
  return st;
}

TrainResult train(const std::vector<SweepDataset>& train_sweeps,
                  const std::vector<SweepDataset>& val_sweeps, const FvrNetConfig& net_cfg,
                  const TrainConfig& cfg, const SubvolumeSpec& spec,
                  const EpochCallback& on_epoch) {
  net_cfg.validate();
  cfg.validate();
  const auto t0 = Clock::now();
  TrainResult result;
  result.params = init_params(net_cfg);
  AdamState adam = make_adam_state(result.params);
  PairSampler sampler(train_sweeps, cfg.frame_range, spec, cfg.seed, cfg.max_redraws);
  const std::vector<RegistrationPair> val_pairs =
      val_sweeps.empty() ? std::vector<RegistrationPair>{}
                         : sample_pairs(val_sweeps, cfg.val_pairs, cfg.frame_range, spec,
                                        cfg.seed ^ kValidationSeedOffset, cfg.max_redraws);

  std::vector<RegistrationPair> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr * std::pow(cfg.lr_decay, epoch / cfg.decay_every);
    double loss_sum = 0.0;
    int seen = 0;
    for (int start = 0; start < cfg.pairs_per_epoch; start += cfg.batch_size) {
      const int want = std::min(cfg.batch_size, cfg.pairs_per_epoch - start);
      batch.clear();
      for (int k = 0; k < want; ++k) {
        RegistrationPair p;
        if (!sampler.draw(p)) continue;
        if (cfg.augment) {
          const auto code = static_cast<unsigned>(sampler.rng()() & 15u);
          apply_symmetry(Symmetry::from_code(code), p.frame, p.subvolume, p.label);
        }
        batch.push_back(std::move(p));
      }
      if (batch.empty()) continue;
      NetParams grad = result.params.zeros_like();
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (const auto& p : batch) {
        const SampleLoss s = loss_and_grad(p.frame, p.subvolume, p.label, result.params, net_cfg);
        if (!std::isfinite(s.loss)) throw Error(ErrorCode::kNonFinite, "training loss diverged");
        loss_sum += s.loss;
        add_scaled(grad, s.grads, inv);
      }
      seen += static_cast<int>(batch.size());
      adam_step(result.params, grad, adam, lr);
    }
    const ValidationStats v = validate(val_pairs, result.params, net_cfg);
    TrainLogRow row{epoch + 1, lr,
                    seen > 0 ? loss_sum / seen : std::numeric_limits<double>::quiet_NaN(), v.loss,
                    v.dist_err_mm};
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  result.skipped_samples = sampler.skipped();
  result.wall_time_s = seconds_since(t0);
  return result;
}

Inference infer(const Frame2D& frame, const Volume3D& subvolume, const NetParams& params,
                const FvrNetConfig& cfg) {
  const auto t0 = Clock::now();
  Inference out;
  out.theta = forward(prepare_input(frame, subvolume, cfg), params, cfg);
  out.wall_time_s = seconds_since(t0);
  if (!out.theta.is_finite()) throw Error(ErrorCode::kNonFinite, "network output is not finite");
  return out;
}

}  // namespace fvr::nn
