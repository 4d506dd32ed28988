#include "filmetric/metrics.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "filmetric/error.hpp"

namespace filmetric {

namespace {

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

double mean_of_squares(std::span<const double> v) {
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
  return mean_of(sq);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void EvalOptions::validate() const {
  if (!(clamp_lo_um < clamp_hi_um)) throw ConfigError("clamp range needs lo < hi");
  if (!(clamp_lo_um >= 0.0)) throw ConfigError("clamp lower bound must be >= 0");
  if (!(log_floor_nm > 0.0)) throw ConfigError("log floor must be > 0");
  if (!std::isfinite(silog_lambda)) throw ConfigError("silog lambda must be finite");
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double silog_from_log_diffs(std::span<const double> d, double lambda) {
  const double m = mean_of(d);
  return mean_of_squares(d) - lambda * m * m;
}

double silog_presentation(double silog) { return 100.0 * std::sqrt(std::max(silog, 0.0)); }

ThicknessField clamp_prediction(const ThicknessField& pred, double lo_um, double hi_um) {
  if (!(lo_um < hi_um)) throw ConfigError("clamp range needs lo < hi");
  const double lo = lo_um * 1000.0, hi = hi_um * 1000.0;
  ThicknessField out = pred;
  for (auto& v : out.values()) {
    if (std::isnan(v)) throw NumericalError("prediction contains NaN");
    v = std::clamp(v, lo, hi);
  }
  return out;
}

MetricsAccumulator::MetricsAccumulator(EvalOptions opts) : opts_(opts) { opts_.validate(); }

void MetricsAccumulator::add(const ThicknessField& pred_raw, const ThicknessField& gt,
                             const ValidityMask* mask) {
  if (pred_raw.width() != gt.width() || pred_raw.height() != gt.height())
    throw ConfigError("prediction and ground truth differ in size");
  if (mask && (mask->width() != gt.width() || mask->height() != gt.height()))
    throw ConfigError("mask and ground truth differ in size");
  const ThicknessField pred = clamp_prediction(pred_raw, opts_.clamp_lo_um, opts_.clamp_hi_um);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (mask && !mask->valid(i)) continue;
    const double g = gt[i], p = pred[i];
    if (!std::isfinite(g) || g < 0.0)
      throw NumericalError("ground truth must be finite and >= 0 on valid pixels");
    const double e = p - g;
    abs_err_.push_back(std::abs(e));
    sq_err_.push_back(e * e);
    if (g > 0.0) {
      const double pl = std::max(p, opts_.log_floor_nm);
      rel_abs_.push_back(std::abs(e) / g);
      rel_sq_.push_back(e * e / g);
      log_diff_.push_back(std::log(pl) - std::log(g));
      log10_abs_.push_back(std::abs(std::log10(pl) - std::log10(g)));
    }
  }
}

MetricsReport MetricsAccumulator::report() const {
  if (abs_err_.empty()) throw ConfigError("no valid pixels to evaluate");
  if (log_diff_.empty()) throw ConfigError("no valid pixels with positive ground truth");
  MetricsReport r;
  r.n_valid = abs_err_.size();
  r.n_relative = log_diff_.size();
  r.clamp_lo_um = opts_.clamp_lo_um;
  r.clamp_hi_um = opts_.clamp_hi_um;
  r.mae = mean_of(abs_err_);
  r.mse = mean_of(sq_err_);
  r.rmse = std::sqrt(r.mse);
  r.rms = r.rmse;
  r.abs_rel = mean_of(rel_abs_);
  r.sq_rel = mean_of(rel_sq_);
  r.log10 = mean_of(log10_abs_);
  r.log_rms = std::sqrt(mean_of_squares(log_diff_));
  r.silog = silog_from_log_diffs(log_diff_, opts_.silog_lambda);
  return r;
}

MetricsReport evaluate(const ThicknessField& pred, const ThicknessField& gt,
                       const ValidityMask* mask, const EvalOptions& opts) {
  MetricsAccumulator acc(opts);
  acc.add(pred, gt, mask);
  return acc.report();
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["silog"] = silog;
  j["abs_rel"] = abs_rel;
  j["log10"] = log10;
  j["rms"] = rms;
  j["sq_rel"] = sq_rel;
  j["log_rms"] = log_rms;
  j["mae"] = mae;
  j["mse"] = mse;
  j["rmse"] = rmse;
  j["n_valid"] = n_valid;
  j["n_relative"] = n_relative;
  j["clamp_lo_um"] = clamp_lo_um;
  j["clamp_hi_um"] = clamp_hi_um;
  return j.dump(2);
}

std::string MetricsReport::csv_header() {
  return "silog,abs_rel,log10,rms,sq_rel,log_rms,mae,mse,rmse,n_valid,n_relative";
}

std::string MetricsReport::csv_row() const {
  std::string s;
  for (double v : {silog, abs_rel, log10, rms, sq_rel, log_rms, mae, mse, rmse}) s += fmt(v) + ",";
  return s + std::to_string(n_valid) + "," + std::to_string(n_relative);
}

}  // namespace filmetric
