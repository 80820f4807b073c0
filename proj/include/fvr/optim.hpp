// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_OPTIM_HPP_
#define FVR_OPTIM_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fvr/geometry.hpp"
#include "fvr/image.hpp"

namespace fvr {

enum class Metric { kMse, kNcc };
enum class Optimizer { kGd, kPowell };

const char* to_string(Metric m);
const char* to_string(Optimizer o);
Metric parse_metric(const std::string& s);
Optimizer parse_optimizer(const std::string& s);

struct OptimConfig {
  Metric metric = Metric::kMse;
  Optimizer optimizer = Optimizer::kPowell;
  int max_iters = 200;
  /// Relative objective change that counts as converged; also the golden
  /// section tolerance (in units of the bracket) for Powell line searches.
  double tol = 1e-6;
  /// Largest per-iteration move of gradient descent, per component (mm, deg).
  std::array<double, 6> gd_step{0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  /// Initial Powell direction lengths, per component (mm, deg).
  std::array<double, 6> powell_bracket{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
};

struct RegistrationResult {
  RigidParams theta_est;
  std::vector<double> objective_trace;  // initial value, then one per iteration
  int iterations = 0;
  int evaluations = 0;
  double wall_time_s = 0.0;
  bool converged = false;
};

using Objective = std::function<double(const RigidParams&)>;
/// Returns the objective and, when grad is non-null, fills its gradient.
using ObjectiveWithGradient = std::function<double(const RigidParams&, std::array<double, 6>*)>;

/// Normalized-gradient descent: each iteration tries a move of length
/// gd_step (in per-component scaled units) along -grad and halves it up to
/// 10 times until the objective decreases. Non-finite objectives count as
/// non-decrease. Accepted iterates never increase the objective.
RegistrationResult gd_minimize(const ObjectiveWithGradient& f, const RigidParams& theta0,
                               const OptimConfig& cfg);

/// Powell's conjugate-direction method. Starts from the coordinate axes
/// scaled by powell_bracket, line-minimizes by bracketing plus golden-section
/// search, and swaps out the direction of largest decrease per Powell's rule.
RegistrationResult powell_minimize(const Objective& f, const RigidParams& theta0,
                                   const OptimConfig& cfg);

/// Registration objective: mse(frame, P(subvol; theta)) or -ncc(...), both
/// over the overlap (pixels sampled inside subvol). Returns +infinity when
/// the overlap is under a quarter of the frame or, for NCC, either side is
/// constant. The gradient treats the overlap as fixed.
ObjectiveWithGradient make_objective(const Frame2D& frame, const Volume3D& subvol,
                                     Metric metric);

/// Runs the configured optimizer on the registration objective. Returns the
/// best pose found (never worse than theta0). For NCC, a constant slice at
/// theta0 triggers up to 3 jittered restarts before Error(kZeroVariance).
RegistrationResult register_iterative(const Frame2D& frame, const Volume3D& subvol,
                                      const RigidParams& theta0, const OptimConfig& cfg);

/// Per-component mean and standard deviation of training labels.
struct LabelStats {
  std::array<double, 6> mean{};
  std::array<double, 6> stddev{};
  static LabelStats from_labels(std::span<const RigidParams> labels);
};

/// Draws each component from N(mean, stddev), deterministic per seed.
RigidParams random_guess(const LabelStats& stats, std::uint64_t seed);

/// Regular lattice centered on `center`: points_per_axis values spanning
/// +/- half_range per component (a single point sits at the center).
struct LatticeSpec {
  RigidParams center;
  std::array<int, 6> points_per_axis{5, 5, 5, 5, 5, 5};
  std::array<double, 6> half_range{4.0, 4.0, 4.0, 4.0, 4.0, 4.0};
};

struct LatticeResult {
  RigidParams argmin;
  double objective = 0.0;
  long long evaluations = 0;
};

/// Exhaustive search of the registration objective over the lattice.
LatticeResult brute_force_oracle(const Frame2D& frame, const Volume3D& subvol,
                                 const LatticeSpec& lattice, Metric metric = Metric::kMse);

}  // namespace fvr

#endif  // FVR_OPTIM_HPP_
