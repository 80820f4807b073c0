// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fvr/error.hpp"
#include "fvr/sampler.hpp"
#include "fvr/textio.hpp"

namespace fvr {
namespace {

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": sizes " +
                                                   std::to_string(a) + " and " +
                                                   std::to_string(b) + " differ");
  }
}

void check_frames(const Frame2D& a, const Frame2D& b) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorCode::kDimensionMismatch, "frames differ in size");
  }
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

struct Moments {
  double mean_a, mean_b, saa, sbb, sab;
};

Moments centered_moments(std::span<const double> a, std::span<const double> b) {
  Moments m{mean_of(a), mean_of(b), 0.0, 0.0, 0.0};
  for (std::size_t p = 0; p < a.size(); ++p) {
    const double da = a[p] - m.mean_a, db = b[p] - m.mean_b;
    m.saa += da * da;
    m.sbb += db * db;
    m.sab += da * db;
  }
  return m;
}

// Variance below this (relative to the squared magnitude) is treated as zero.
bool degenerate(double ss, double mean, std::size_t n) {
  return !(ss > 1e-24 * std::max(1.0, mean * mean) * static_cast<double>(n));
}

std::array<double, 6> pose_diff(const RigidParams& pred, const RigidParams& label) {
  std::array<double, 6> d{};
  for (std::size_t k = 0; k < 6; ++k) d[k] = pred[k] - label[k];
  return d;
}

}  // namespace

double mse(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "mse");
  if (a.empty()) throw Error(ErrorCode::kEmptyBatch, "mse of empty images");
  double s = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    const double d = a[p] - b[p];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double mse(const Frame2D& a, const Frame2D& b) {
  check_frames(a, b);
  return mse(std::span<const double>(a.as_double()), std::span<const double>(b.as_double()));
}

double ncc(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "ncc");
  if (a.empty()) throw Error(ErrorCode::kEmptyBatch, "ncc of empty images");
  const Moments m = centered_moments(a, b);
  if (degenerate(m.saa, m.mean_a, a.size()) || degenerate(m.sbb, m.mean_b, b.size())) {
    throw Error(ErrorCode::kZeroVariance, "ncc of a constant image");
  }
  return std::clamp(m.sab / std::sqrt(m.saa * m.sbb), -1.0, 1.0);
}

double ncc(const Frame2D& a, const Frame2D& b) {
  check_frames(a, b);
  return ncc(std::span<const double>(a.as_double()), std::span<const double>(b.as_double()));
}

double mse_masked(std::span<const double> a, std::span<const double> b,
                  std::span<const std::uint8_t> mask) {
  check_same_size(a.size(), b.size(), "mse_masked");
  check_same_size(a.size(), mask.size(), "mse_masked mask");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (!mask[p]) continue;
    const double d = a[p] - b[p];
    s += d * d;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kEmptyBatch, "mse over an empty mask");
  return s / static_cast<double>(n);
}

double ncc_masked(std::span<const double> a, std::span<const double> b,
                  std::span<const std::uint8_t> mask) {
  check_same_size(a.size(), b.size(), "ncc_masked");
  check_same_size(a.size(), mask.size(), "ncc_masked mask");
  std::vector<double> ma, mb;
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (mask[p]) {
      ma.push_back(a[p]);
      mb.push_back(b[p]);
    }
  }
  return ncc(ma, mb);
}

std::vector<double> ncc_gradient(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "ncc_gradient");
  const Moments m = centered_moments(a, b);
  if (degenerate(m.saa, m.mean_a, a.size()) || degenerate(m.sbb, m.mean_b, b.size())) {
    throw Error(ErrorCode::kZeroVariance, "ncc of a constant image");
  }
  const double denom = std::sqrt(m.saa * m.sbb);
  const double r = m.sab / denom;
  std::vector<double> g(a.size());
  for (std::size_t p = 0; p < a.size(); ++p) {
    g[p] = (a[p] - m.mean_a) / denom - r * (b[p] - m.mean_b) / m.sbb;
  }
  return g;
}

double loss_trans(std::span<const RigidParams> pred, std::span<const RigidParams> label,
                  NormKind norm) {
  if (pred.empty()) throw Error(ErrorCode::kEmptyBatch, "loss_trans of an empty batch");
  check_same_size(pred.size(), label.size(), "loss_trans");
  double total = 0.0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    double sq = 0.0;
    for (double d : pose_diff(pred[n], label[n])) sq += d * d;
    total += norm == NormKind::kSquared ? sq : std::sqrt(sq);
  }
  return total / static_cast<double>(pred.size());
}

std::vector<std::array<double, 6>> loss_trans_grad(std::span<const RigidParams> pred,
                                                   std::span<const RigidParams> label,
                                                   NormKind norm) {
  if (pred.empty()) throw Error(ErrorCode::kEmptyBatch, "loss_trans of an empty batch");
  check_same_size(pred.size(), label.size(), "loss_trans");
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  std::vector<std::array<double, 6>> grads(pred.size());
  for (std::size_t n = 0; n < pred.size(); ++n) {
    const auto d = pose_diff(pred[n], label[n]);
    double scale = 2.0 * inv_n;
    if (norm == NormKind::kEuclidean) {
      double sq = 0.0;
      for (double v : d) sq += v * v;
      scale = sq > 0.0 ? inv_n / std::sqrt(sq) : 0.0;
    }
    for (std::size_t k = 0; k < 6; ++k) grads[n][k] = scale * d[k];
  }
  return grads;
}

SimLoss loss_sim(std::span<const Frame2D> frames, std::span<const Volume3D> volumes,
                 std::span<const RigidParams> thetas, NormKind norm,
                 std::span<const std::vector<std::uint8_t>> pixel_masks) {
  if (frames.empty()) throw Error(ErrorCode::kEmptyBatch, "loss_sim of an empty batch");
  check_same_size(frames.size(), volumes.size(), "loss_sim volumes");
  check_same_size(frames.size(), thetas.size(), "loss_sim thetas");
  if (!pixel_masks.empty()) check_same_size(frames.size(), pixel_masks.size(), "loss_sim masks");
  const double inv_n = 1.0 / static_cast<double>(frames.size());
  SimLoss out;
  out.grad.resize(frames.size());
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const Frame2D& f = frames[n];
    auto [slice, jac] = resample_with_jacobian(volumes[n], thetas[n], f.height, f.width, f.spacing);
    const std::vector<double> fixed = f.as_double();
    const std::vector<std::uint8_t>& mask = pixel_masks.empty() ? slice.inside : pixel_masks[n];
    check_same_size(mask.size(), fixed.size(), "loss_sim mask");
    std::size_t count = 0;
    double sq = 0.0;
    for (std::size_t p = 0; p < fixed.size(); ++p) {
      if (!mask[p]) continue;
      const double d = slice.values[p] - fixed[p];
      sq += d * d;
      ++count;
    }
    out.grad[n].fill(0.0);
    if (count == 0) continue;
    const double m = sq / static_cast<double>(count);
    // d mse / d pixel_p = 2 (slice_p - fixed_p) / count
    double outer = 2.0 / static_cast<double>(count);
    double term = m;
    if (norm == NormKind::kEuclidean) {
      term = std::sqrt(m);
      outer = m > 0.0 ? outer / (2.0 * term) : 0.0;
    }
    std::vector<double> dpix(fixed.size(), 0.0);
    for (std::size_t p = 0; p < fixed.size(); ++p) {
      if (mask[p]) dpix[p] = outer * inv_n * (slice.values[p] - fixed[p]);
    }
    out.value += inv_n * term;
    out.grad[n] = accumulate_gradient(jac, dpix);
  }
  return out;
}

ParamCorrelations param_correlations(std::span<const RigidParams> preds,
                                     std::span<const RigidParams> labels) {
  check_same_size(preds.size(), labels.size(), "param_correlations");
  if (preds.size() < 3) {
    throw Error(ErrorCode::kInvalidArgument, "correlations need at least 3 pairs");
  }
  ParamCorrelations out;
  double sum = 0.0;
  int defined = 0;
  std::vector<double> a(preds.size()), b(preds.size());
  for (std::size_t k = 0; k < 6; ++k) {
    for (std::size_t n = 0; n < preds.size(); ++n) {
      a[n] = preds[n][k];
      b[n] = labels[n][k];
    }
    try {
      out.coeff[k] = ncc(a, b);
      out.defined[k] = true;
      sum += out.coeff[k];
      ++defined;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kZeroVariance) throw;
      out.coeff[k] = std::numeric_limits<double>::quiet_NaN();
      out.defined[k] = false;
    }
  }
  out.mean_partial = defined < 6;
  out.mean = defined > 0 ? sum / defined : std::numeric_limits<double>::quiet_NaN();
  return out;
}

// ---------------------------------------------------------------------------
// EvalReport

const char* EvalReport::csv_header() {
  return "method,dist_err_mm,img_sim_ncc,corr_tx,corr_ty,corr_tz,corr_ax,corr_ay,corr_az,"
         "corr_mean,runtime_s";
}

std::string EvalReport::csv_row() const {
  std::ostringstream out;
  out << method << ',' << format_double(dist_err_mm) << ',' << format_double(img_sim_ncc);
  for (double c : corr.coeff) out << ',' << format_double(c);
  out << ',' << format_double(corr.mean) << ',' << format_double(runtime_s);
  return out.str();
}

EvalReport EvalReport::from_csv_row(const std::string& row) {
  const auto cells = split(trim(row), ',');
  if (cells.size() != 11) throw Error(ErrorCode::kDimensionMismatch, "report row needs 11 cells");
  EvalReport r;
  r.method = cells[0];
  r.dist_err_mm = parse_double(cells[1]);
  r.img_sim_ncc = parse_double(cells[2]);
  int defined = 0;
  for (std::size_t k = 0; k < 6; ++k) {
    r.corr.coeff[k] = parse_double(cells[3 + k]);
    r.corr.defined[k] = !std::isnan(r.corr.coeff[k]);
    defined += r.corr.defined[k] ? 1 : 0;
  }
  r.corr.mean_partial = defined < 6;
  r.corr.mean = parse_double(cells[9]);
  r.runtime_s = parse_double(cells[10]);
  return r;
}

namespace {

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double number_or_nan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["method"] = method;
  j["dist_err_mm"] = number_or_null(dist_err_mm);
  j["img_sim_ncc"] = number_or_null(img_sim_ncc);
  static constexpr const char* kNames[6] = {"tx", "ty", "tz", "ax", "ay", "az"};
  for (std::size_t k = 0; k < 6; ++k) {
    j["correlation"][kNames[k]] = number_or_null(corr.coeff[k]);
  }
  j["correlation"]["mean"] = number_or_null(corr.mean);
  j["correlation"]["mean_partial"] = corr.mean_partial;
  j["runtime_s"] = number_or_null(runtime_s);
  j["init_dist_err_mm"] = number_or_null(init_dist_err_mm);
  j["n_pairs"] = n_pairs;
  j["n_failed"] = n_failed;
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  EvalReport r;
  r.method = j.at("method").get<std::string>();
  r.dist_err_mm = number_or_nan(j.at("dist_err_mm"));
  r.img_sim_ncc = number_or_nan(j.at("img_sim_ncc"));
  static constexpr const char* kNames[6] = {"tx", "ty", "tz", "ax", "ay", "az"};
  for (std::size_t k = 0; k < 6; ++k) {
    r.corr.coeff[k] = number_or_nan(j.at("correlation").at(kNames[k]));
    r.corr.defined[k] = !std::isnan(r.corr.coeff[k]);
  }
  r.corr.mean = number_or_nan(j.at("correlation").at("mean"));
  r.corr.mean_partial = j.at("correlation").at("mean_partial").get<bool>();
  r.runtime_s = number_or_nan(j.at("runtime_s"));
  r.init_dist_err_mm = number_or_nan(j.at("init_dist_err_mm"));
  r.n_pairs = j.at("n_pairs").get<int>();
  r.n_failed = j.at("n_failed").get<int>();
  return r;
}

EvalReport evaluate_pairs(const std::string& name, const PairMethod& method,
                          std::span<const RegistrationPair> pairs) {
  EvalReport report;
  report.method = name;
  report.n_pairs = static_cast<int>(pairs.size());
  std::vector<RigidParams> preds, labels;
  double dist_sum = 0.0, ncc_sum = 0.0, time_sum = 0.0, init_sum = 0.0;
  for (const RegistrationPair& pair : pairs) {
    const Frame2D& f = pair.frame;
    init_sum += corner_distance_error(RigidParams{}, pair.label, f.height, f.width, f.spacing);
    RigidParams est;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      est = method(pair);
    } catch (const Error&) {
      ++report.n_failed;
      continue;
    }
    const auto t1 = std::chrono::steady_clock::now();
    time_sum += std::chrono::duration<double>(t1 - t0).count();
    const double dist = corner_distance_error(est, pair.label, f.height, f.width, f.spacing);
    report.per_pair_dist_err.push_back(dist);
    dist_sum += dist;
    const SampledSlice s = sample_slice(pair.subvolume, est, f.height, f.width, f.spacing);
    try {
      ncc_sum += ncc_masked(f.as_double(), s.values, s.inside);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kZeroVariance) throw;
    }
    preds.push_back(est);
    labels.push_back(pair.label);
  }
  const double done = static_cast<double>(preds.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.init_dist_err_mm = pairs.empty() ? nan : init_sum / static_cast<double>(pairs.size());
  report.dist_err_mm = done > 0 ? dist_sum / done : nan;
  report.img_sim_ncc = done > 0 ? ncc_sum / done : nan;
  report.runtime_s = done > 0 ? time_sum / done : nan;
  if (preds.size() >= 3) {
    report.corr = param_correlations(preds, labels);
  } else {
    report.corr.coeff.fill(nan);
    report.corr.mean = nan;
    report.corr.mean_partial = true;
  }
  return report;
}

}  // namespace fvr
