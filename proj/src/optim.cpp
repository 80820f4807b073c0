// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/optim.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <tuple>
#include <utility>

#include "fvr/error.hpp"
#include "fvr/metrics.hpp"
#include "fvr/sampler.hpp"

namespace fvr {
namespace {

using Vec6 = std::array<double, 6>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGolden = 1.618033988749895;
constexpr double kCGold = 0.3819660112501051;
constexpr int kMaxHalvings = 10;
constexpr int kMaxBracketSteps = 50;
constexpr int kMaxBrentSteps = 100;
constexpr int kMaxRestarts = 3;
constexpr double kMinOverlapFraction = 0.25;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RigidParams axpy(const RigidParams& p, double t, const Vec6& d) {
  RigidParams out = p;
  for (std::size_t k = 0; k < 6; ++k) out[k] += t * d[k];
  return out;
}

void check_config(const OptimConfig& cfg) {
  if (cfg.max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  if (!(cfg.tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tol must be positive");
  for (std::size_t k = 0; k < 6; ++k) {
    if (!(cfg.gd_step[k] > 0.0) || !(cfg.powell_bracket[k] > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "step sizes must be positive");
    }
  }
}

// Non-finite values rank worse than any finite value.
double sanitize(double v) { return std::isfinite(v) ? v : kInf; }

// Counts calls and maps non-finite values to +inf.
class CountedObjective {
 public:
  explicit CountedObjective(const Objective& f) : f_(f) {}
  double operator()(const RigidParams& p) {
    ++calls_;
    return sanitize(f_(p));
  }
  int calls() const { return calls_; }

 private:
  const Objective& f_;
  int calls_ = 0;
};

// Minimizes g(t) = f(p + t d) starting from t = 0 with g(0) = fp. On return p
// and fp hold the best point seen; they change only on strict improvement.
void line_minimize(CountedObjective& f, RigidParams& p, double& fp, const Vec6& d, double tol) {
  auto g = [&](double t) { return f(axpy(p, t, d)); };

  // Downhill bracket (a, b, c) with g(b) <= g(a), g(b) <= g(c).
  double a = 0.0, fa = fp;
  double b = 1.0, fb = g(b);
  if (fb > fa) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  double c = b + kGolden * (b - a);
  double fc = g(c);
  for (int k = 0; k < kMaxBracketSteps && fb > fc; ++k) {
    a = b;
    fa = fb;
    b = c;
    fb = fc;
    c = b + kGolden * (b - a);
    fc = g(c);
  }

  double best_t = 0.0, best_f = fp;
  auto consider = [&](double t, double ft) {
    if (ft < best_f) {
      best_f = ft;
      best_t = t;
    }
  };
  consider(a, fa);
  consider(b, fb);
  consider(c, fc);

  // Brent: golden-section steps with parabolic acceleration.
  double lo = std::min(a, c), hi = std::max(a, c);
  double x = b, w = b, v = b;
  double fx = fb, fw = fb, fv = fb;
  double e = 0.0, step = 0.0;
  if (std::isfinite(fx)) {
    for (int it = 0; it < kMaxBrentSteps; ++it) {
      const double xm = 0.5 * (lo + hi);
      const double tol1 = tol * std::abs(x) + tol;
      const double tol2 = 2.0 * tol1;
      if (std::abs(x - xm) <= tol2 - 0.5 * (hi - lo)) break;
      bool golden = true;
      if (std::abs(e) > tol1 && std::isfinite(fw) && std::isfinite(fv)) {
        const double r = (x - w) * (fx - fv);
        double q = (x - v) * (fx - fw);
        double num = (x - v) * q - (x - w) * r;
        q = 2.0 * (q - r);
        if (q > 0.0) num = -num;
        q = std::abs(q);
        const double e_prev = e;
        if (std::abs(num) < std::abs(0.5 * q * e_prev) && num > q * (lo - x) &&
            num < q * (hi - x)) {
          e = step;
          step = num / q;
          const double u = x + step;
          if (u - lo < tol2 || hi - u < tol2) step = xm - x >= 0.0 ? tol1 : -tol1;
          golden = false;
        }
      }
      if (golden) {
        e = x >= xm ? lo - x : hi - x;
        step = kCGold * e;
      }
      const double u =
          std::abs(step) >= tol1 ? x + step : x + (step >= 0.0 ? tol1 : -tol1);
      const double fu = g(u);
      consider(u, fu);
      if (fu <= fx) {
        if (u >= x) lo = x; else hi = x;
        v = w; fv = fw;
        w = x; fw = fx;
        x = u; fx = fu;
      } else {
        if (u < x) lo = u; else hi = u;
        if (fu <= fw || w == x) {
          v = w; fv = fw;
          w = u; fw = fu;
        } else if (fu <= fv || v == x || v == w) {
          v = u; fv = fu;
        }
      }
    }
  }

  if (best_f < fp) {
    p = axpy(p, best_t, d);
    fp = best_f;
  }
}

}  // namespace

const char* to_string(Metric m) { return m == Metric::kMse ? "mse" : "ncc"; }
const char* to_string(Optimizer o) { return o == Optimizer::kGd ? "gd" : "powell"; }

Metric parse_metric(const std::string& s) {
  if (s == "mse") return Metric::kMse;
  if (s == "ncc") return Metric::kNcc;
  throw Error(ErrorCode::kInvalidArgument, "unknown metric '" + s + "' (mse|ncc)");
}

Optimizer parse_optimizer(const std::string& s) {
  if (s == "gd") return Optimizer::kGd;
  if (s == "powell") return Optimizer::kPowell;
  throw Error(ErrorCode::kInvalidArgument, "unknown optimizer '" + s + "' (gd|powell)");
}

RegistrationResult gd_minimize(const ObjectiveWithGradient& f, const RigidParams& theta0,
                               const OptimConfig& cfg) {
  check_config(cfg);
  const auto t0 = Clock::now();
  RegistrationResult res;
  Vec6 grad{};
  RigidParams x = theta0;
  double fx = sanitize(f(x, &grad));
  res.evaluations = 1;
  if (!std::isfinite(fx)) throw Error(ErrorCode::kNonFinite, "objective is not finite at theta0");
  res.objective_trace.push_back(fx);

  for (int it = 1; it <= cfg.max_iters; ++it) {
    res.iterations = it;
    double norm2 = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      const double h = cfg.gd_step[k] * grad[k];
      norm2 += h * h;
    }
    const double norm = std::sqrt(norm2);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      res.converged = true;
      break;
    }
    Vec6 dir{};
    for (std::size_t k = 0; k < 6; ++k) dir[k] = -cfg.gd_step[k] * cfg.gd_step[k] * grad[k] / norm;

    bool accepted = false;
    double alpha = 1.0;
    Vec6 trial_grad{};
    RigidParams xn;
    double fn = kInf;
    for (int h = 0; h <= kMaxHalvings; ++h, alpha *= 0.5) {
      xn = axpy(x, alpha, dir);
      fn = sanitize(f(xn, &trial_grad));
      ++res.evaluations;
      if (fn < fx) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    const double delta = fx - fn;
    const double scale = std::max(std::abs(fx), std::numeric_limits<double>::min());
    x = xn;
    fx = fn;
    grad = trial_grad;
    res.objective_trace.push_back(fx);
    if (delta < cfg.tol * scale) {
      res.converged = true;
      break;
    }
  }
  res.theta_est = x;
  res.wall_time_s = seconds_since(t0);
  return res;
}

RegistrationResult powell_minimize(const Objective& f, const RigidParams& theta0,
                                   const OptimConfig& cfg) {
  check_config(cfg);
  const auto t0 = Clock::now();
  CountedObjective obj(f);
  RegistrationResult res;

  std::array<Vec6, 6> dirs{};
  for (std::size_t k = 0; k < 6; ++k) dirs[k][k] = cfg.powell_bracket[k];

  RigidParams p = theta0;
  double fp = obj(p);
  if (!std::isfinite(fp)) throw Error(ErrorCode::kNonFinite, "objective is not finite at theta0");
  res.objective_trace.push_back(fp);

  for (int it = 1; it <= cfg.max_iters; ++it) {
    res.iterations = it;
    const RigidParams p0 = p;
    const double f0 = fp;
    std::size_t ibig = 0;
    double del = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      const double before = fp;
      line_minimize(obj, p, fp, dirs[i], cfg.tol);
      if (before - fp > del) {
        del = before - fp;
        ibig = i;
      }
    }
    res.objective_trace.push_back(fp);
    if (2.0 * (f0 - fp) <= cfg.tol * (std::abs(f0) + std::abs(fp)) + 1e-300) {
      res.converged = true;
      break;
    }
    // Powell's rule: adopt the net displacement as a new direction only when
    // it is promising and the largest-decrease direction is not dominant.
    Vec6 moved{};
    for (std::size_t k = 0; k < 6; ++k) moved[k] = p[k] - p0[k];
    const double fe = obj(axpy(p, 1.0, moved));
    if (fe < f0) {
      const double a = f0 - fp - del;
      const double b = f0 - fe;
      const double test = 2.0 * (f0 - 2.0 * fp + fe) * a * a - del * b * b;
      if (test < 0.0) {
        line_minimize(obj, p, fp, moved, cfg.tol);
        dirs[ibig] = dirs[5];
        dirs[5] = moved;
      }
    }
  }
  res.theta_est = p;
  res.evaluations = obj.calls();
  res.wall_time_s = seconds_since(t0);
  return res;
}

ObjectiveWithGradient make_objective(const Frame2D& frame, const Volume3D& subvol,
                                     Metric metric) {
  std::vector<double> target = frame.as_double();
  const int h = frame.height, w = frame.width;
  const double s = frame.spacing;
  return [&subvol, target = std::move(target), h, w, s, metric](const RigidParams& theta,
                                                                Vec6* grad) -> double {
    SampledSlice slice;
    SliceJacobian jac;
    if (grad != nullptr) {
      std::tie(slice, jac) = resample_with_jacobian(subvol, theta, h, w, s);
      grad->fill(0.0);
    } else {
      slice = sample_slice(subvol, theta, h, w, s);
    }
    const std::size_t n = target.size();
    const std::size_t overlap = slice.inside_count();
    if (static_cast<double>(overlap) < kMinOverlapFraction * static_cast<double>(n)) return kInf;

    // Compact the overlap so both metrics see only sampled pixels.
    std::vector<double> a, b;
    a.reserve(overlap);
    b.reserve(overlap);
    for (std::size_t p = 0; p < n; ++p) {
      if (!slice.inside[p]) continue;
      a.push_back(target[p]);
      b.push_back(slice.values[p]);
    }
    double value = 0.0;
    std::vector<double> dcompact;
    if (metric == Metric::kMse) {
      value = mse(a, b);
      if (grad != nullptr) {
        dcompact.resize(overlap);
        for (std::size_t q = 0; q < overlap; ++q) {
          dcompact[q] = 2.0 / static_cast<double>(overlap) * (b[q] - a[q]);
        }
      }
    } else {
      try {
        value = -ncc(a, b);
        if (grad != nullptr) {
          dcompact = ncc_gradient(a, b);
          for (double& d : dcompact) d = -d;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kZeroVariance) throw;
        return kInf;
      }
    }
    if (grad != nullptr) {
      std::vector<double> dloss(n, 0.0);
      for (std::size_t p = 0, q = 0; p < n; ++p) {
        if (slice.inside[p]) dloss[p] = dcompact[q++];
      }
      *grad = accumulate_gradient(jac, dloss);
    }
    return value;
  };
}

RegistrationResult register_iterative(const Frame2D& frame, const Volume3D& subvol,
                                      const RigidParams& theta0, const OptimConfig& cfg) {
  check_config(cfg);
  if (!theta0.is_finite()) throw Error(ErrorCode::kNonFinite, "theta0 is not finite");
  const auto t0 = Clock::now();
  const ObjectiveWithGradient fg = make_objective(frame, subvol, cfg.metric);

  RigidParams start = theta0;
  double f_start = sanitize(fg(start, nullptr));
  if (!std::isfinite(f_start) && cfg.metric == Metric::kNcc) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int r = 0; r < kMaxRestarts && !std::isfinite(f_start); ++r) {
      start = theta0;
      for (std::size_t k = 0; k < 6; ++k) start[k] += cfg.powell_bracket[k] * normal(rng);
      f_start = sanitize(fg(start, nullptr));
    }
    if (!std::isfinite(f_start)) {
      throw Error(ErrorCode::kZeroVariance, "sampled slice stays constant after restarts");
    }
  }
  if (!std::isfinite(f_start)) throw Error(ErrorCode::kNonFinite, "objective is not finite");

  RegistrationResult res;
  if (cfg.optimizer == Optimizer::kGd) {
    res = gd_minimize(fg, start, cfg);
  } else {
    res = powell_minimize([&fg](const RigidParams& p) { return fg(p, nullptr); }, start, cfg);
  }
  res.wall_time_s = seconds_since(t0);
  return res;
}

LabelStats LabelStats::from_labels(std::span<const RigidParams> labels) {
  if (labels.empty()) throw Error(ErrorCode::kEmptyBatch, "no labels");
  LabelStats st;
  const double n = static_cast<double>(labels.size());
  for (const RigidParams& l : labels) {
    for (std::size_t k = 0; k < 6; ++k) st.mean[k] += l[k];
  }
  for (double& m : st.mean) m /= n;
  for (const RigidParams& l : labels) {
    for (std::size_t k = 0; k < 6; ++k) {
      const double d = l[k] - st.mean[k];
      st.stddev[k] += d * d;
    }
  }
  for (double& s : st.stddev) s = std::sqrt(s / n);
  return st;
}

RigidParams random_guess(const LabelStats& stats, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RigidParams out;
  for (std::size_t k = 0; k < 6; ++k) {
    const double z = normal(rng);
    out[k] = stats.stddev[k] == 0.0 ? stats.mean[k] : stats.mean[k] + stats.stddev[k] * z;
  }
  return out;
}

LatticeResult brute_force_oracle(const Frame2D& frame, const Volume3D& subvol,
                                 const LatticeSpec& lattice, Metric metric) {
  std::array<std::vector<double>, 6> axes;
  for (std::size_t k = 0; k < 6; ++k) {
    const int n = lattice.points_per_axis[k];
    if (n < 1) throw Error(ErrorCode::kInvalidArgument, "lattice needs >= 1 point per axis");
    const double c = lattice.center[k], h = lattice.half_range[k];
    for (int i = 0; i < n; ++i) {
      axes[k].push_back(n == 1 ? c : c - h + 2.0 * h * i / (n - 1));
    }
  }
  const ObjectiveWithGradient fg = make_objective(frame, subvol, metric);
  LatticeResult best;
  best.argmin = lattice.center;
  best.objective = kInf;
  std::array<int, 6> idx{};
  while (true) {
    RigidParams p;
    for (std::size_t k = 0; k < 6; ++k) p[k] = axes[k][static_cast<std::size_t>(idx[k])];
    const double v = sanitize(fg(p, nullptr));
    ++best.evaluations;
    if (v < best.objective) {
      best.objective = v;
      best.argmin = p;
    }
    std::size_t k = 0;
    for (; k < 6; ++k) {
      if (++idx[k] < lattice.points_per_axis[k]) break;
      idx[k] = 0;
    }
    if (k == 6) break;
  }
  return best;
}

}  // namespace fvr
