// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/nn/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <span>

#include "fvr/error.hpp"
#include "fvr/io.hpp"
#include "fvr/metrics.hpp"

namespace fvr::nn {
namespace {

constexpr char kMagic[] = "FVRNET1";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

Conv3dSpec down_block(int in, int out) { return {in, out, {3, 3, 3}, {2, 2, 2}, {1, 1, 1}}; }

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> table,
             const char* what) {
  for (const auto& [name, value] : table) {
    if (s == name) return value;
  }
  throw Error(ErrorCode::kInvalidArgument, std::string("unknown ") + what + " '" + s + "'");
}

// Conv weights are [out, in, k...]; dense weights are [out, in].
std::size_t fan_in(const std::vector<int>& weight_shape) {
  std::size_t n = 1;
  for (std::size_t a = 1; a < weight_shape.size(); ++a) n *= weight_shape[a];
  return n;
}

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

void put_f64(std::vector<char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(const std::vector<char>& buf) : buf_(buf) {}
  bool done() const { return pos_ == buf_.size(); }
  void skip(std::size_t n) { need(n), pos_ += n; }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * b);
    }
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * b);
    }
    return std::bit_cast<double>(v);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw Error(ErrorCode::kDimensionMismatch, "truncated params file");
  }
  const std::vector<char>& buf_;
  std::size_t pos_ = 0;
};

Tensor as_4d_frame(const Tensor& frame) {
  return frame.reshaped({1, 1, frame.dim(1), frame.dim(2)});
}

// The frame repeated through the depth axis: [1, H, W] -> [1, D, H, W].
Tensor replicate_depth(const Tensor& frame, int depth) {
  const std::size_t plane = frame.size();
  Tensor out({1, depth, frame.dim(1), frame.dim(2)});
  for (int k = 0; k < depth; ++k) std::copy_n(frame.data(), plane, out.data() + k * plane);
  return out;
}

struct BlockOut {
  Tensor pre, post;
};

BlockOut conv_relu(const Tensor& x, const NetParams& p, const std::string& name,
                   const Conv3dSpec& spec) {
  BlockOut b;
  b.pre = conv3d_forward(x, p.at(name + ".weight"), p.at(name + ".bias"), spec);
  b.post = relu_forward(b.pre);
  return b;
}

// Back through relu then conv; stores parameter gradients and returns the
// input gradient (empty when not requested).
Tensor conv_relu_backward(const Tensor& x, const Tensor& pre, const Tensor& d_out,
                          const NetParams& p, NetParams& grads, const std::string& name,
                          const Conv3dSpec& spec, bool need_input_grad) {
  ConvGrads g =
      conv3d_backward(x, p.at(name + ".weight"), relu_backward(pre, d_out), spec, need_input_grad);
  grads.at(name + ".weight") = std::move(g.d_weight);
  grads.at(name + ".bias") = std::move(g.d_bias);
  return std::move(g.d_input);
}

Tensor frame_branch_input(const ForwardCache& c, const Architecture& arch) {
  if (arch.has_lift) {
    const Tensor& l = c.lift_out;
    return l.reshaped({1, l.dim(0), l.dim(1), l.dim(2)});
  }
  return as_4d_frame(c.frame_in);
}

}  // namespace

const char* to_string(Fusion f) {
  switch (f) {
    case Fusion::kDualBalanced: return "dual_balanced";
    case Fusion::kEarlyFusion: return "early_fusion";
    case Fusion::kUnbalancedLate: return "unbalanced_late";
  }
  return "?";
}

const char* to_string(LossMode m) {
  switch (m) {
    case LossMode::kTrans: return "trans";
    case LossMode::kSim: return "sim";
    case LossMode::kBoth: return "both";
  }
  return "?";
}

const char* to_string(Pooling p) { return p == Pooling::kFlatten ? "flatten" : "average"; }

Fusion parse_fusion(const std::string& s) {
  return parse_enum<Fusion>(s,
                            {{"dual_balanced", Fusion::kDualBalanced},
                             {"early_fusion", Fusion::kEarlyFusion},
                             {"unbalanced_late", Fusion::kUnbalancedLate}},
                            "fusion");
}

LossMode parse_loss_mode(const std::string& s) {
  return parse_enum<LossMode>(
      s, {{"trans", LossMode::kTrans}, {"sim", LossMode::kSim}, {"both", LossMode::kBoth}},
      "loss mode");
}

Pooling parse_pooling(const std::string& s) {
  return parse_enum<Pooling>(s, {{"flatten", Pooling::kFlatten}, {"average", Pooling::kAverage}},
                             "pooling");
}

void FvrNetConfig::validate() const {
  if (!(sim_weight >= 0.0) || !std::isfinite(sim_weight)) {
    throw Error(ErrorCode::kInvalidArgument, "sim_weight must be finite and >= 0");
  }
  if (depth < 1 || height < 1 || width < 1 || channels < 1 || hidden < 1) {
    throw Error(ErrorCode::kInvalidArgument, "network sizes must be >= 1");
  }
}

double FvrNetConfig::effective_sim_weight() const {
  switch (loss_mode) {
    case LossMode::kTrans: return 0.0;
    case LossMode::kSim: return sim_weight > 0.0 ? sim_weight : 1.0;
    case LossMode::kBoth: return sim_weight;
  }
  return 0.0;
}

Architecture make_architecture(const FvrNetConfig& cfg) {
  cfg.validate();
  const int c = cfg.channels, d = cfg.depth, h = cfg.height, w = cfg.width;
  Architecture a;
  a.volume1 = down_block(1, c);
  a.volume2 = down_block(c, c);
  std::vector<int> volume_in{1, d, h, w};
  switch (cfg.fusion) {
    case Fusion::kDualBalanced:
      a.has_lift = true;
      a.has_frame_branch = true;
      a.lift = Conv2dSpec{1, d, {3, 3}, {1, 1}, {1, 1}};
      break;
    case Fusion::kUnbalancedLate:
      a.has_frame_branch = true;
      break;
    case Fusion::kEarlyFusion:
      volume_in[1] = 2 * d;
      break;
  }
  a.volume_feature_shape = a.volume2.output_shape(a.volume1.output_shape(volume_in));
  a.fused_shape = a.volume_feature_shape;
  if (a.has_frame_branch) {
    a.frame1 = down_block(1, c);
    a.frame2 = down_block(c, c);
    const std::vector<int> frame_in{1, a.has_lift ? d : 1, h, w};
    a.frame_feature_shape = a.frame2.output_shape(a.frame1.output_shape(frame_in));
    a.fused_shape[1] += a.frame_feature_shape[1];
  }
  // The first head conv spans the whole fused depth.
  a.head1 = Conv3dSpec{c, c, {a.fused_shape[1], 3, 3}, {1, 1, 1}, {0, 1, 1}};
  a.head2 = Conv3dSpec{c, c, {1, 3, 3}, {1, 2, 2}, {0, 1, 1}};
  const auto out = a.head2.output_shape(a.head1.output_shape(a.fused_shape));
  a.flat_features = cfg.pooling == Pooling::kFlatten
                        ? static_cast<int>(element_count(out))
                        : c;
  return a;
}

std::size_t NetParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.value.size();
  return n;
}

void NetParams::add(std::string name, Tensor value) {
  if (contains(name)) throw Error(ErrorCode::kInvalidArgument, "duplicate tensor '" + name + "'");
  tensors_.push_back({std::move(name), std::move(value)});
}

bool NetParams::contains(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return true;
  }
  return false;
}

Tensor& NetParams::at(const std::string& name) {
  for (auto& t : tensors_) {
    if (t.name == name) return t.value;
  }
  throw Error(ErrorCode::kInvalidArgument, "no tensor named '" + name + "'");
}

const Tensor& NetParams::at(const std::string& name) const {
  return const_cast<NetParams*>(this)->at(name);
}

NetParams NetParams::zeros_like() const {
  NetParams z;
  for (const auto& t : tensors_) z.tensors_.push_back({t.name, Tensor(t.value.shape())});
  return z;
}

void NetParams::expect_same_layout(const NetParams& other) const {
  if (other.size() != size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter sets differ in tensor count");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (tensors_[i].name != other.tensors_[i].name) {
      throw Error(ErrorCode::kShapeMismatch, "tensor '" + tensors_[i].name + "' vs '" +
                                                 other.tensors_[i].name + "'");
    }
    expect_shape(other.tensors_[i].value, tensors_[i].value.shape(), tensors_[i].name.c_str());
  }
}

bool NetParams::all_finite() const {
  for (const auto& t : tensors_) {
    if (!t.value.all_finite()) return false;
  }
  return true;
}

std::vector<char> NetParams::serialize() const {
  std::vector<char> out(kMagic, kMagic + kMagicLen);
  for (const auto& t : tensors_) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put_u32(out, static_cast<std::uint32_t>(t.value.rank()));
    for (int e : t.value.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    for (double v : t.value.values()) put_f64(out, v);
  }
  return out;
}

NetParams NetParams::deserialize(const std::vector<char>& bytes) {
  if (bytes.size() < kMagicLen || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0) {
    throw Error(ErrorCode::kBadMagic, "not an FVRNET1 parameter file");
  }
  Reader r(bytes);
  r.skip(kMagicLen);
  NetParams p;
  while (!r.done()) {
    std::string name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw Error(ErrorCode::kDimensionMismatch, "bad tensor rank");
    std::vector<int> shape(rank);
    for (auto& e : shape) {
      const std::uint32_t v = r.u32();
      if (v == 0 || v > (1u << 30)) throw Error(ErrorCode::kDimensionMismatch, "bad extent");
      e = static_cast<int>(v);
    }
    std::vector<double> data(element_count(shape));
    for (double& v : data) v = r.f64();
    p.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return p;
}

void NetParams::save(const std::filesystem::path& path) const {
  const std::vector<char> bytes = serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

NetParams NetParams::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

NetParams init_params(const FvrNetConfig& cfg) {
  const Architecture a = make_architecture(cfg);
  std::mt19937_64 rng(cfg.seed);
  NetParams p;
  auto add_layer = [&](const std::string& name, std::vector<int> weight_shape) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(weight_shape)));
    std::uniform_real_distribution<double> u(-bound, bound);
    Tensor wt(weight_shape);
    for (double& v : wt.values()) v = u(rng);
    const int out = weight_shape[0];
    p.add(name + ".weight", std::move(wt));
    p.add(name + ".bias", Tensor({out}));
  };
  if (a.has_lift) add_layer("frame.lift", a.lift.weight_shape());
  if (a.has_frame_branch) {
    add_layer("frame.conv1", a.frame1.weight_shape());
    add_layer("frame.conv2", a.frame2.weight_shape());
  }
  add_layer("volume.conv1", a.volume1.weight_shape());
  add_layer("volume.conv2", a.volume2.weight_shape());
  add_layer("head.conv1", a.head1.weight_shape());
  add_layer("head.conv2", a.head2.weight_shape());
  add_layer("head.fc1", {cfg.hidden, a.flat_features});
  add_layer("head.fc2", {6, cfg.hidden});
  return p;
}

NetInput prepare_input(const Frame2D& frame, const Volume3D& subvolume, const FvrNetConfig& cfg) {
  if (frame.height != cfg.height || frame.width != cfg.width) {
    throw Error(ErrorCode::kShapeMismatch,
                "frame is " + std::to_string(frame.height) + "x" + std::to_string(frame.width) +
                    ", network expects " + std::to_string(cfg.height) + "x" +
                    std::to_string(cfg.width));
  }
  if (subvolume.depth != cfg.depth || subvolume.height != cfg.height ||
      subvolume.width != cfg.width) {
    throw Error(ErrorCode::kShapeMismatch,
                "subvolume is " + std::to_string(subvolume.depth) + "x" +
                    std::to_string(subvolume.height) + "x" + std::to_string(subvolume.width) +
                    ", network expects " + std::to_string(cfg.depth) + "x" +
                    std::to_string(cfg.height) + "x" + std::to_string(cfg.width));
  }
  NetInput in;
  in.frame = Tensor({1, cfg.height, cfg.width});
  in.volume = Tensor({1, cfg.depth, cfg.height, cfg.width});
  if (cfg.standardize) {
    double sum = 0.0, sq = 0.0;
    for (float v : frame.pixels) sum += v;
    for (float v : subvolume.voxels) sum += v;
    const double n = static_cast<double>(frame.size() + subvolume.size());
    const double mean = sum / n;
    for (float v : frame.pixels) sq += (v - mean) * (v - mean);
    for (float v : subvolume.voxels) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq / n);
    in.offset = mean;
    in.scale = sd > 1e-12 ? sd : 1.0;
  }
  for (std::size_t i = 0; i < frame.size(); ++i) {
    in.frame[i] = (frame.pixels[i] - in.offset) / in.scale;
  }
  for (std::size_t i = 0; i < subvolume.size(); ++i) {
    in.volume[i] = (subvolume.voxels[i] - in.offset) / in.scale;
  }
  return in;
}

namespace {

void run_volume_branch(const Tensor& input, const NetParams& params, const Architecture& a,
                       ForwardCache& c) {
  c.volume_in = input;
  BlockOut v1 = conv_relu(c.volume_in, params, "volume.conv1", a.volume1);
  BlockOut v2 = conv_relu(v1.post, params, "volume.conv2", a.volume2);
  c.v1_pre = std::move(v1.pre), c.v1 = std::move(v1.post);
  c.v2_pre = std::move(v2.pre), c.v2 = std::move(v2.post);
}

void run_frame_branch(const Tensor& frame, const NetParams& params, const Architecture& a,
                      ForwardCache& c) {
  if (!a.has_frame_branch) {
    throw Error(ErrorCode::kInvalidArgument, "early fusion has no separate frame branch");
  }
  c.frame_in = frame;
  if (a.has_lift) {
    c.lift_out = conv2d_forward(frame, params.at("frame.lift.weight"),
                                params.at("frame.lift.bias"), a.lift);
  }
  BlockOut f1 = conv_relu(frame_branch_input(c, a), params, "frame.conv1", a.frame1);
  BlockOut f2 = conv_relu(f1.post, params, "frame.conv2", a.frame2);
  c.f1_pre = std::move(f1.pre), c.f1 = std::move(f1.post);
  c.f2_pre = std::move(f2.pre), c.f2 = std::move(f2.post);
}

}  // namespace

Tensor frame_branch(const Tensor& frame, const NetParams& params, const FvrNetConfig& cfg) {
  expect_shape(frame, {1, cfg.height, cfg.width}, "frame input");
  ForwardCache c;
  run_frame_branch(frame, params, make_architecture(cfg), c);
  return std::move(c.f2);
}

Tensor volume_branch(const Tensor& volume, const NetParams& params, const FvrNetConfig& cfg) {
  const int depth = cfg.fusion == Fusion::kEarlyFusion ? 2 * cfg.depth : cfg.depth;
  expect_shape(volume, {1, depth, cfg.height, cfg.width}, "volume input");
  ForwardCache c;
  run_volume_branch(volume, params, make_architecture(cfg), c);
  return std::move(c.v2);
}

RigidParams forward(const NetInput& in, const NetParams& params, const FvrNetConfig& cfg,
                    ForwardCache* cache) {
  const Architecture a = make_architecture(cfg);
  expect_shape(in.frame, {1, cfg.height, cfg.width}, "frame input");
  expect_shape(in.volume, {1, cfg.depth, cfg.height, cfg.width}, "volume input");
  ForwardCache local;
  ForwardCache& c = cache != nullptr ? *cache : local;
  c = ForwardCache{};
  c.frame_in = in.frame;
  if (a.has_frame_branch) {
    run_volume_branch(in.volume, params, a, c);
    run_frame_branch(in.frame, params, a, c);
    c.fused = concat_depth(c.f2, c.v2);
  } else {
    run_volume_branch(concat_depth(replicate_depth(in.frame, cfg.depth), in.volume), params, a,
                      c);
    c.fused = c.v2;
  }

  BlockOut h1 = conv_relu(c.fused, params, "head.conv1", a.head1);
  BlockOut h2 = conv_relu(h1.post, params, "head.conv2", a.head2);
  c.h1_pre = std::move(h1.pre), c.h1 = std::move(h1.post);
  c.h2_pre = std::move(h2.pre), c.h2 = std::move(h2.post);
  c.pooled = cfg.pooling == Pooling::kFlatten
                 ? c.h2.reshaped({static_cast<int>(c.h2.size())})
                 : global_avg_pool_forward(c.h2);
  c.fc1_pre = fully_connected_forward(c.pooled, params.at("head.fc1.weight"),
                                      params.at("head.fc1.bias"));
  c.fc1 = relu_forward(c.fc1_pre);
  const Tensor out =
      fully_connected_forward(c.fc1, params.at("head.fc2.weight"), params.at("head.fc2.bias"));
  RigidParams theta;
  for (std::size_t k = 0; k < 6; ++k) theta[k] = out[k];
  return theta;
}

NetParams backward(const ForwardCache& c, const NetParams& params, const FvrNetConfig& cfg,
                   const std::array<double, 6>& d_theta) {
  const Architecture a = make_architecture(cfg);
  NetParams grads = params.zeros_like();

  const Tensor d_out({6}, std::vector<double>(d_theta.begin(), d_theta.end()));
  DenseGrads fc2 = fully_connected_backward(c.fc1, params.at("head.fc2.weight"), d_out);
  grads.at("head.fc2.weight") = std::move(fc2.d_weight);
  grads.at("head.fc2.bias") = std::move(fc2.d_bias);
  DenseGrads fc1 = fully_connected_backward(c.pooled, params.at("head.fc1.weight"),
                                            relu_backward(c.fc1_pre, fc2.d_input));
  grads.at("head.fc1.weight") = std::move(fc1.d_weight);
  grads.at("head.fc1.bias") = std::move(fc1.d_bias);

  const Tensor d_h2 = cfg.pooling == Pooling::kFlatten
                          ? fc1.d_input.reshaped(c.h2.shape())
                          : global_avg_pool_backward(c.h2.shape(), fc1.d_input);
  const Tensor d_h1 =
      conv_relu_backward(c.h1, c.h2_pre, d_h2, params, grads, "head.conv2", a.head2, true);
  const Tensor d_fused =
      conv_relu_backward(c.fused, c.h1_pre, d_h1, params, grads, "head.conv1", a.head1, true);

  Tensor d_v2 = d_fused;
  if (a.has_frame_branch) {
    auto parts = split_depth(d_fused, c.f2.dim(1));
    d_v2 = std::move(parts[1]);
    const Tensor d_f1 = conv_relu_backward(c.f1, c.f2_pre, parts[0], params, grads, "frame.conv2",
                                           a.frame2, true);
    const Tensor d_fin = conv_relu_backward(frame_branch_input(c, a), c.f1_pre, d_f1, params,
                                            grads, "frame.conv1", a.frame1, a.has_lift);
    if (a.has_lift) {
      const Tensor d_lift = d_fin.reshaped(c.lift_out.shape());
      ConvGrads g = conv2d_backward(c.frame_in, params.at("frame.lift.weight"), d_lift, a.lift,
                                    false);
      grads.at("frame.lift.weight") = std::move(g.d_weight);
      grads.at("frame.lift.bias") = std::move(g.d_bias);
    }
  }
  const Tensor d_v1 =
      conv_relu_backward(c.v1, c.v2_pre, d_v2, params, grads, "volume.conv2", a.volume2, true);
  conv_relu_backward(c.volume_in, c.v1_pre, d_v1, params, grads, "volume.conv1", a.volume1,
                     false);
  return grads;
}

SampleLoss loss_and_grad(const Frame2D& frame, const Volume3D& subvolume,
                         const RigidParams& label, const NetParams& params,
                         const FvrNetConfig& cfg) {
  const NetInput in = prepare_input(frame, subvolume, cfg);
  ForwardCache cache;
  SampleLoss out;
  out.theta_pred = forward(in, params, cfg, &cache);

  std::array<double, 6> d_theta{};
  const std::span<const RigidParams> pred(&out.theta_pred, 1);
  const std::span<const RigidParams> lab(&label, 1);
  out.trans = loss_trans(pred, lab);
  if (cfg.uses_trans_loss()) {
    d_theta = loss_trans_grad(pred, lab)[0];
    out.loss = out.trans;
  }
  const double w = cfg.effective_sim_weight();
  if (w > 0.0) {
    // Standardization is affine, so the masked MSE of standardized images is
    // the raw MSE divided by the squared scale.
    const double inv_var = 1.0 / (in.scale * in.scale);
    const SimLoss s = loss_sim(std::span<const Frame2D>(&frame, 1),
                               std::span<const Volume3D>(&subvolume, 1), pred);
    out.sim = s.value * inv_var;
    out.loss += w * out.sim;
    for (std::size_t k = 0; k < 6; ++k) d_theta[k] += w * inv_var * s.grad[0][k];
  }
  out.grads = backward(cache, params, cfg, d_theta);
  return out;
}

AdamState make_adam_state(const NetParams& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(NetParams& params, const NetParams& grads, AdamState& state, double lr,
               const AdamOptions& opts) {
  params.expect_same_layout(grads);
  params.expect_same_layout(state.m);
  params.expect_same_layout(state.v);
  ++state.step;
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& p = params.tensors()[t].value;
    const Tensor& g = grads.tensors()[t].value;
    Tensor& m = state.m.tensors()[t].value;
    Tensor& v = state.v.tensors()[t].value;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g[i];
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opts.eps);
    }
  }
}

}  // namespace fvr::nn
