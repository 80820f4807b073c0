// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_METRICS_HPP_
#define FVR_METRICS_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fvr/geometry.hpp"
#include "fvr/image.hpp"
#include "fvr/subvolume.hpp"

namespace fvr {

double mse(std::span<const double> a, std::span<const double> b);
double mse(const Frame2D& a, const Frame2D& b);

/// Pearson correlation of the pixel vectors (population convention).
/// Throws Error(kZeroVariance) if either input is constant.
double ncc(std::span<const double> a, std::span<const double> b);
double ncc(const Frame2D& a, const Frame2D& b);
/// MSE restricted to pixels where mask != 0. Throws Error(kEmptyBatch).
double mse_masked(std::span<const double> a, std::span<const double> b,
                  std::span<const std::uint8_t> mask);
/// NCC restricted to pixels where mask != 0.
double ncc_masked(std::span<const double> a, std::span<const double> b,
                  std::span<const std::uint8_t> mask);

/// d ncc(a, b) / d b_p for every pixel.
std::vector<double> ncc_gradient(std::span<const double> a, std::span<const double> b);

/// Squared: ||x||^2 (true MSE, the default). Euclidean: ||x||.
enum class NormKind { kSquared, kEuclidean };

/// (1/N) sum_n ||label_n - pred_n|| over the 6 pose components.
/// Throws Error(kEmptyBatch) / Error(kDimensionMismatch).
double loss_trans(std::span<const RigidParams> pred, std::span<const RigidParams> label,
                  NormKind norm = NormKind::kSquared);
/// Gradient of loss_trans with respect to each prediction.
std::vector<std::array<double, 6>> loss_trans_grad(std::span<const RigidParams> pred,
                                                   std::span<const RigidParams> label,
                                                   NormKind norm = NormKind::kSquared);

struct SimLoss {
  double value = 0.0;
  std::vector<std::array<double, 6>> grad;  // d value / d theta_n
};

/// (1/N) sum_n mse(frame_n, P(volume_n; theta_n)) with the squared norm, or the
/// per-pair RMS difference with the Euclidean norm. Each MSE runs over the
/// overlap (pixels sampled inside the volume) unless pixel_masks supplies a
/// fixed pixel set per pair. A pair without any counted pixel contributes 0.
/// Gradients flow through the slice Jacobian; mask changes are not
/// differentiated.
SimLoss loss_sim(std::span<const Frame2D> frames, std::span<const Volume3D> volumes,
                 std::span<const RigidParams> thetas, NormKind norm = NormKind::kSquared,
                 std::span<const std::vector<std::uint8_t>> pixel_masks = {});

/// Per-component Pearson coefficients (tx..az) and their mean over the
/// defined components. A component is undefined when either side is constant.
struct ParamCorrelations {
  std::array<double, 6> coeff{};
  std::array<bool, 6> defined{};
  double mean = 0.0;
  bool mean_partial = false;  // some component was excluded
};

ParamCorrelations param_correlations(std::span<const RigidParams> preds,
                                     std::span<const RigidParams> labels);

struct EvalReport {
  std::string method;
  double dist_err_mm = 0.0;
  double img_sim_ncc = 0.0;
  ParamCorrelations corr;
  double runtime_s = 0.0;
  double init_dist_err_mm = 0.0;
  int n_pairs = 0;
  int n_failed = 0;
  std::vector<double> per_pair_dist_err;

  static const char* csv_header();
  std::string csv_row() const;
  static EvalReport from_csv_row(const std::string& row);
  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

/// A registration method maps a pair to its estimated pose of the frame in
/// subvolume coordinates (comparable with pair.label).
using PairMethod = std::function<RigidParams(const RegistrationPair&)>;

/// Runs the method on every pair in order and aggregates DistErr (corner
/// distance at the frame's size and spacing), ImgSim (NCC of the frame and the
/// slice sampled at the estimate, over their overlap), label correlations and
/// mean wall time.
/// Pairs whose method throws fvr::Error are counted in n_failed and skipped.
EvalReport evaluate_pairs(const std::string& name, const PairMethod& method,
                          std::span<const RegistrationPair> pairs);

}  // namespace fvr

#endif  // FVR_METRICS_HPP_
