// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_NN_MODEL_HPP_
#define FVR_NN_MODEL_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fvr/geometry.hpp"
#include "fvr/image.hpp"
#include "fvr/nn/layers.hpp"
#include "fvr/nn/tensor.hpp"

namespace fvr::nn {

enum class Fusion { kDualBalanced, kEarlyFusion, kUnbalancedLate };
enum class LossMode { kTrans, kSim, kBoth };
enum class Pooling { kFlatten, kAverage };

const char* to_string(Fusion f);
const char* to_string(LossMode m);
const char* to_string(Pooling p);
Fusion parse_fusion(const std::string& s);
LossMode parse_loss_mode(const std::string& s);
Pooling parse_pooling(const std::string& s);

struct FvrNetConfig {
  Fusion fusion = Fusion::kDualBalanced;
  LossMode loss_mode = LossMode::kBoth;
  double sim_weight = 1.0;
  // Input geometry: subvolume depth x height x width; frames are height x width.
  int depth = 32;
  int height = 128;
  int width = 128;
  int channels = 8;
  int hidden = 64;
  /// kFlatten keeps the head's spatial layout; kAverage collapses it.
  Pooling pooling = Pooling::kFlatten;
  /// Shift and scale each sample by the mean and stddev of its frame and
  /// subvolume intensities taken together.
  bool standardize = true;
  std::uint64_t seed = 0;

  /// Throws Error(kInvalidArgument) on negative weight or non-positive sizes.
  void validate() const;
  /// Weight on the similarity term after applying loss_mode.
  double effective_sim_weight() const;
  bool uses_trans_loss() const { return loss_mode != LossMode::kSim; }
};

/// Layer geometry derived from a config.
struct Architecture {
  bool has_lift = false;          // frame channel lift (dual only)
  bool has_frame_branch = false;  // separate frame convs (dual, unbalanced)
  Conv2dSpec lift;
  Conv3dSpec frame1, frame2, volume1, volume2, head1, head2;
  std::vector<int> frame_feature_shape;   // empty for early fusion
  std::vector<int> volume_feature_shape;
  std::vector<int> fused_shape;
  int flat_features = 0;
};

Architecture make_architecture(const FvrNetConfig& cfg);

struct NamedTensor {
  std::string name;
  Tensor value;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Ordered named weights and biases.
class NetParams {
 public:
  std::vector<NamedTensor>& tensors() { return tensors_; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }
  std::size_t parameter_count() const;

  void add(std::string name, Tensor value);
  bool contains(const std::string& name) const;
  /// Throws Error(kInvalidArgument) for unknown names.
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  /// Zero tensors of matching names and shapes.
  NetParams zeros_like() const;
  /// Throws Error(kShapeMismatch) unless names and shapes agree.
  void expect_same_layout(const NetParams& other) const;
  bool all_finite() const;

  /// "FVRNET1" then per tensor: u32 name length, name bytes, u32 rank,
  /// u32 extents, little-endian float64 values.
  void save(const std::filesystem::path& path) const;
  static NetParams load(const std::filesystem::path& path);
  std::vector<char> serialize() const;
  static NetParams deserialize(const std::vector<char>& bytes);

  friend bool operator==(const NetParams&, const NetParams&) = default;

 private:
  std::vector<NamedTensor> tensors_;
};

/// Fan-in scaled uniform weights, zero biases, deterministic per cfg.seed.
NetParams init_params(const FvrNetConfig& cfg);

/// Network-ready input for one pair.
struct NetInput {
  Tensor frame;   // [1, H, W]
  Tensor volume;  // [1, D, H, W]
  double offset = 0.0;  // subtracted intensity
  double scale = 1.0;   // divisor applied after the offset
};

/// Checks sizes against cfg (kShapeMismatch) and applies standardization.
NetInput prepare_input(const Frame2D& frame, const Volume3D& subvolume, const FvrNetConfig& cfg);

/// Activations kept for the backward pass.
struct ForwardCache {
  Tensor frame_in, volume_in;
  Tensor lift_out;
  Tensor f1_pre, f1, f2_pre, f2;
  Tensor v1_pre, v1, v2_pre, v2;
  Tensor fused;
  Tensor h1_pre, h1, h2_pre, h2;
  Tensor pooled;
  Tensor fc1_pre, fc1;
};

/// Frame features [C, D', H', W'] from a [1, H, W] frame. Throws
/// Error(kInvalidArgument) for early fusion, which has no frame branch.
Tensor frame_branch(const Tensor& frame, const NetParams& params, const FvrNetConfig& cfg);
/// Volume features from [1, D, H, W] (early fusion: [1, 2D, H, W], frame first).
Tensor volume_branch(const Tensor& volume, const NetParams& params, const FvrNetConfig& cfg);

RigidParams forward(const NetInput& in, const NetParams& params, const FvrNetConfig& cfg,
                    ForwardCache* cache = nullptr);

/// Parameter gradients given d(loss)/d(theta_pred).
NetParams backward(const ForwardCache& cache, const NetParams& params, const FvrNetConfig& cfg,
                   const std::array<double, 6>& d_theta);

struct SampleLoss {
  double loss = 0.0;
  double trans = 0.0;  // squared parameter error
  double sim = 0.0;    // masked intensity MSE in standardized units
  RigidParams theta_pred;
  NetParams grads;
};

/// loss = trans + effective_sim_weight * sim. The similarity term resamples
/// the subvolume at theta_pred and compares with the frame; its gradient
/// reaches theta_pred through the sampler Jacobian.
SampleLoss loss_and_grad(const Frame2D& frame, const Volume3D& subvolume,
                         const RigidParams& label, const NetParams& params,
                         const FvrNetConfig& cfg);

struct AdamState {
  NetParams m;
  NetParams v;
  long long step = 0;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(const NetParams& params);

/// Bias-corrected Adam update in place.
void adam_step(NetParams& params, const NetParams& grads, AdamState& state, double lr,
               const AdamOptions& opts = {});

}  // namespace fvr::nn

#endif  // FVR_NN_MODEL_HPP_
