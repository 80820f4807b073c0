// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "fvr/error.hpp"
#include "fvr/metrics.hpp"
#include "fvr/nn/model.hpp"
#include "fvr/nn/train.hpp"
#include "fvr/sampler.hpp"

namespace fs = std::filesystem;
using namespace fvr;
using namespace fvr::nn;

namespace {

// Miniature geometry: 20 px frames cropped to 16, 8-slice subvolumes.
constexpr SubvolumeSpec kSpec{8, 16, 16, 4, 0.0};

FvrNetConfig tiny_config(Fusion fusion, LossMode mode = LossMode::kBoth) {
  FvrNetConfig c;
  c.fusion = fusion;
  c.loss_mode = mode;
  c.depth = 8;
  c.height = 16;
  c.width = 16;
  c.channels = 4;
  c.hidden = 8;
  c.seed = 3;
  return c;
}

SweepDataset tiny_sweep(std::uint64_t seed, Trajectory t = Trajectory::kLinear) {
  const Volume3D v = phantom_generate(seed, 48, 48, 48, 2.0);
  SweepOptions o;
  o.frame_height = o.frame_width = 20;
  return sweep_simulate(v, seed, 21, t, o);
}

const RegistrationPair& tiny_pair() {
  static const RegistrationPair pair = make_pair(tiny_sweep(5), 12, 9, kSpec);
  return pair;
}

double loss_at(const NetParams& p, const FvrNetConfig& cfg) {
  const RegistrationPair& pair = tiny_pair();
  return loss_and_grad(pair.frame, pair.subvolume, pair.label, p, cfg).loss;
}

}  // namespace

TEST_SUITE("nn_model") {

TEST_CASE("branches produce matching feature shapes") {
  for (int size : {16, 32, 128}) {
    FvrNetConfig c;
    c.depth = size / 4;
    c.height = c.width = size;
    const Architecture dual = make_architecture(c);
    CHECK(dual.frame_feature_shape == dual.volume_feature_shape);
    CHECK(dual.fused_shape[1] == 2 * dual.volume_feature_shape[1]);
    c.fusion = Fusion::kEarlyFusion;
    CHECK(make_architecture(c).frame_feature_shape.empty());
  }
  const FvrNetConfig c = tiny_config(Fusion::kDualBalanced);
  const NetParams p = init_params(c);
  const Tensor f = frame_branch(Tensor({1, 16, 16}, 0.3), p, c);
  const Tensor v = volume_branch(Tensor({1, 8, 16, 16}, 0.3), p, c);
  CHECK(f.shape() == v.shape());
  CHECK(f.shape() == std::vector<int>{4, 2, 4, 4});
  CHECK_THROWS_AS(frame_branch(Tensor({1, 16, 16}), p, tiny_config(Fusion::kEarlyFusion)), Error);
}

TEST_CASE("zero input gives zero features with zero biases") {
  const FvrNetConfig c = tiny_config(Fusion::kDualBalanced);
  const NetParams p = init_params(c);
  for (const NamedTensor& t : p.tensors()) {
    if (t.name.ends_with(".bias")) {
      for (double b : t.value.values()) CHECK(b == 0.0);
    }
  }
  const Tensor f = frame_branch(Tensor({1, 16, 16}), p, c);
  const Tensor v = volume_branch(Tensor({1, 8, 16, 16}), p, c);
  for (double x : f.values()) CHECK(x == 0.0);
  for (double x : v.values()) CHECK(x == 0.0);
}

TEST_CASE("initialization is seeded and fan-in bounded") {
  FvrNetConfig c = tiny_config(Fusion::kDualBalanced);
  const NetParams a = init_params(c);
  CHECK(init_params(c) == a);
  c.seed = 4;
  CHECK_FALSE(init_params(c) == a);
  const Tensor& w = a.at("volume.conv1.weight");
  const double bound = 1.0 / std::sqrt(27.0);
  for (double x : w.values()) CHECK(std::abs(x) <= bound);
  CHECK(a.tensors().front().name == "frame.lift.weight");
  CHECK(a.tensors().back().name == "head.fc2.bias");
  CHECK_FALSE(init_params(tiny_config(Fusion::kUnbalancedLate)).contains("frame.lift.weight"));
  CHECK_FALSE(init_params(tiny_config(Fusion::kEarlyFusion)).contains("frame.conv1.weight"));
}

TEST_CASE("network gradients match finite differences") {
  for (Fusion fusion : {Fusion::kDualBalanced, Fusion::kEarlyFusion, Fusion::kUnbalancedLate}) {
    CAPTURE(to_string(fusion));
    const FvrNetConfig c = tiny_config(fusion);
    NetParams p = init_params(c);
    const RegistrationPair& pair = tiny_pair();
    const SampleLoss s = loss_and_grad(pair.frame, pair.subvolume, pair.label, p, c);
    CHECK(s.loss >= 0.0);
    CHECK(s.sim > 0.0);
    for (NamedTensor& t : p.tensors()) {
      CAPTURE(t.name);
      const std::size_t step = std::max<std::size_t>(1, t.value.size() / 5);
      for (std::size_t i = 0; i < t.value.size(); i += step) {
        const double keep = t.value[i], h = 1e-6;
        t.value[i] = keep + h;
        const double up = loss_at(p, c);
        t.value[i] = keep - h;
        const double dn = loss_at(p, c);
        t.value[i] = keep;
        CHECK(s.grads.at(t.name)[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-3).scale(1e-6));
      }
    }
  }
}

TEST_CASE("zero similarity weight reduces to the parameter loss") {
  FvrNetConfig both = tiny_config(Fusion::kDualBalanced, LossMode::kBoth);
  both.sim_weight = 0.0;
  const FvrNetConfig trans = tiny_config(Fusion::kDualBalanced, LossMode::kTrans);
  const NetParams p = init_params(both);
  const RegistrationPair& pair = tiny_pair();
  const SampleLoss a = loss_and_grad(pair.frame, pair.subvolume, pair.label, p, both);
  const SampleLoss b = loss_and_grad(pair.frame, pair.subvolume, pair.label, p, trans);
  CHECK(a.loss == b.loss);
  CHECK(a.grads == b.grads);
  double sq = 0.0;
  for (std::size_t k = 0; k < 6; ++k) sq += std::pow(a.theta_pred[k] - pair.label[k], 2);
  CHECK(a.trans == doctest::Approx(sq));

  const FvrNetConfig sim = tiny_config(Fusion::kDualBalanced, LossMode::kSim);
  const SampleLoss s = loss_and_grad(pair.frame, pair.subvolume, pair.label, p, sim);
  CHECK(s.loss == doctest::Approx(s.sim));
}

TEST_CASE("standardized input has zero mean and unit spread") {
  const FvrNetConfig c = tiny_config(Fusion::kDualBalanced);
  const RegistrationPair& pair = tiny_pair();
  const NetInput in = prepare_input(pair.frame, pair.subvolume, c);
  double sum = 0.0, sq = 0.0;
  const std::size_t n = in.frame.size() + in.volume.size();
  for (double x : in.frame.values()) sum += x, sq += x * x;
  for (double x : in.volume.values()) sum += x, sq += x * x;
  CHECK(std::abs(sum / n) < 1e-9);
  CHECK(sq / n == doctest::Approx(1.0));
  FvrNetConfig wrong = c;
  wrong.height = wrong.width = 32;
  try {
    prepare_input(pair.frame, pair.subvolume, wrong);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }
}

TEST_CASE("adam leaves parameters alone under zero gradient") {
  const FvrNetConfig c = tiny_config(Fusion::kDualBalanced);
  NetParams p = init_params(c);
  const NetParams before = p;
  AdamState st = make_adam_state(p);
  adam_step(p, p.zeros_like(), st, 1e-2);
  CHECK(p == before);
  CHECK(st.step == 1);
}

TEST_CASE("adam first step moves each weight by the learning rate") {
  NetParams p;
  p.add("w", Tensor({3}, std::vector<double>{1.0, -2.0, 0.5}));
  NetParams g;
  g.add("w", Tensor({3}, std::vector<double>{4.0, -1e-3, 0.0}));
  AdamState st = make_adam_state(p);
  adam_step(p, g, st, 0.1);
  CHECK(p.at("w")[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p.at("w")[1] == doctest::Approx(-1.9).epsilon(1e-4));
  CHECK(p.at("w")[2] == 0.5);
}

TEST_CASE("adam converges on a one-dimensional quadratic") {
  NetParams p;
  p.add("x", Tensor({1}, 5.0));
  AdamState st = make_adam_state(p);
  int steps = 0;
  while (std::abs(p.at("x")[0] - 2.0) > 1e-3 && steps < 5000) {
    NetParams g;
    g.add("x", Tensor({1}, 2.0 * (p.at("x")[0] - 2.0)));
    adam_step(p, g, st, 1e-2);
    ++steps;
  }
  CHECK(steps < 5000);
  NetParams bad;
  bad.add("y", Tensor({1}));
  CHECK_THROWS_AS(adam_step(p, bad, st, 1e-2), Error);
}

TEST_CASE("parameter files round-trip bit exactly") {
  const NetParams p = init_params(tiny_config(Fusion::kDualBalanced));
  const fs::path path = fs::temp_directory_path() / "fvr_params_roundtrip.bin";
  p.save(path);
  const NetParams back = NetParams::load(path);
  fs::remove(path);
  CHECK(back == p);
  std::vector<char> bytes = p.serialize();
  CHECK(std::string(bytes.begin(), bytes.begin() + 7) == "FVRNET1");
  CHECK(NetParams::deserialize(bytes) == p);
  bytes.pop_back();
  CHECK_THROWS_AS(NetParams::deserialize(bytes), Error);
  bytes[0] = 'X';
  try {
    NetParams::deserialize(bytes);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBadMagic);
  }
}

TEST_CASE("symmetries keep frames consistent with their labels") {
  const RegistrationPair pair = make_pair(tiny_sweep(6, Trajectory::kFan), 12, 9, kSpec);
  // The subvolume is itself resampled, so the residual at the label is small
  // but not zero; every symmetry must preserve it exactly.
  const SampledSlice s0 = sample_slice(pair.subvolume, pair.label, 16, 16, pair.frame.spacing);
  const double base = mse_masked(pair.frame.as_double(), s0.values, s0.inside);
  CHECK(base < 1e-5);
  for (unsigned code = 0; code < 16; ++code) {
    CAPTURE(code);
    Frame2D f = pair.frame;
    Volume3D v = pair.subvolume;
    RigidParams label = pair.label;
    apply_symmetry(Symmetry::from_code(code), f, v, label);
    const SampledSlice s = sample_slice(v, label, 16, 16, f.spacing);
    CHECK(mse_masked(f.as_double(), s.values, s.inside) == doctest::Approx(base).epsilon(1e-9));
    // Corner-distance is a property of the plane, so it is preserved.
    CHECK(corner_distance_error(label, RigidParams{}, 16, 16, 2.0) ==
          doctest::Approx(corner_distance_error(pair.label, RigidParams{}, 16, 16, 2.0)));
  }
  CHECK(Symmetry::from_code(0).flip_x == false);
  CHECK(Symmetry::from_code(15).swap_xy);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const std::vector<SweepDataset> sweeps{tiny_sweep(7), tiny_sweep(8, Trajectory::kFan)};
  const FvrNetConfig c = tiny_config(Fusion::kDualBalanced);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 4;
  tc.pairs_per_epoch = 8;
  tc.val_pairs = 4;
  tc.frame_range = 4;
  tc.lr = 0.0;
  const TrainResult r = train(sweeps, sweeps, c, tc, kSpec);
  CHECK(r.params == init_params(c));
  REQUIRE(r.log.size() == 1);
  CHECK(r.log[0].lr == 0.0);
}

TEST_CASE("training reduces the loss and is deterministic") {
  // One sweep offers few distinct pairs, so the net can memorize them.
  const std::vector<SweepDataset> sweeps{tiny_sweep(20)};
  const FvrNetConfig c = tiny_config(Fusion::kDualBalanced, LossMode::kTrans);
  TrainConfig tc;
  tc.epochs = 40;
  tc.batch_size = 4;
  tc.pairs_per_epoch = 32;
  tc.val_pairs = 16;
  tc.frame_range = 4;
  tc.lr = 3e-3;
  tc.augment = false;
  tc.seed = 9;
  int callbacks = 0;
  const TrainResult a = train(sweeps, sweeps, c, tc, kSpec, [&](const TrainLogRow&) { ++callbacks; });
  CHECK(callbacks == 40);
  CHECK(a.params.all_finite());
  CHECK(a.log.back().train_loss <= 0.5 * a.log.front().train_loss);
  CHECK(a.log.back().val_loss <= 0.5 * a.log.front().val_loss);
  CHECK(a.log[5].lr == doctest::Approx(tc.lr * tc.lr_decay));

  const TrainResult b = train(sweeps, sweeps, c, tc, kSpec);
  CHECK(b.params == a.params);

  const std::string csv = training_log_csv(a.log);
  CHECK(csv.rfind("epoch,lr,train_loss,val_loss,val_dist_err_mm\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 41);
}

TEST_CASE("inference is finite and repeatable") {
  const FvrNetConfig c = tiny_config(Fusion::kUnbalancedLate);
  const NetParams p = init_params(c);
  const RegistrationPair& pair = tiny_pair();
  const Inference a = infer(pair.frame, pair.subvolume, p, c);
  const Inference b = infer(pair.frame, pair.subvolume, p, c);
  CHECK(a.theta == b.theta);
  CHECK(a.wall_time_s >= 0.0);
  for (std::size_t k = 0; k < 6; ++k) CHECK(std::isfinite(a.theta[k]));
  const ValidationStats v = validate({pair}, p, c);
  CHECK(v.loss >= 0.0);
  CHECK(std::isnan(validate({}, p, c).loss));
}

TEST_CASE("configuration names and validation") {
  CHECK(parse_fusion("early_fusion") == Fusion::kEarlyFusion);
  CHECK(std::string(to_string(LossMode::kBoth)) == "both");
  CHECK(parse_pooling("average") == Pooling::kAverage);
  CHECK_THROWS_AS(parse_fusion("late"), Error);
  FvrNetConfig c;
  c.sim_weight = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.sim_weight = 0.0;
  c.loss_mode = LossMode::kSim;
  CHECK(c.effective_sim_weight() == 1.0);
  c.loss_mode = LossMode::kTrans;
  c.sim_weight = 2.0;
  CHECK(c.effective_sim_weight() == 0.0);
  TrainConfig t;
  t.batch_size = 0;
  CHECK_THROWS_AS(t.validate(), Error);
}

}  // TEST_SUITE
