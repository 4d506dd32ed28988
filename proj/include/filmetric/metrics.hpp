#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "filmetric/image.hpp"

namespace filmetric {

struct EvalOptions {
  double clamp_lo_um = 0.0;
  double clamp_hi_um = 5.0;
  double log_floor_nm = 1.0;   // predictions are raised to this before any log
  double silog_lambda = 0.85;

  void validate() const;
};

/// Thickness metrics in nm; relative and log metrics are unit-free.
/// rms and rmse are the same number.
struct MetricsReport {
  double silog = 0.0;
  double abs_rel = 0.0;
  double log10 = 0.0;
  double rms = 0.0;
  double sq_rel = 0.0;
  double log_rms = 0.0;
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  std::size_t n_valid = 0;     // pixels in the absolute metrics
  std::size_t n_relative = 0;  // of those, pixels with gt > 0 (relative/log metrics)
  double clamp_lo_um = 0.0;
  double clamp_hi_um = 5.0;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Pointwise clamp to [lo_um, hi_um], converted to nm.
ThicknessField clamp_prediction(const ThicknessField& pred, double lo_um = 0.0,
                                double hi_um = 5.0);

/// Pred is clamped first. Valid pixels are those set in `mask` (all when
/// null). gt = 0 pixels count toward mae/mse/rmse only.
MetricsReport evaluate(const ThicknessField& pred, const ThicknessField& gt,
                       const ValidityMask* mask = nullptr, const EvalOptions& opts = {});

/// Pixel-weighted pooling across images: equals evaluate() on the
/// concatenation of every added image's valid pixels.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(EvalOptions opts = {});

  void add(const ThicknessField& pred, const ThicknessField& gt, const ValidityMask* mask = nullptr);
  std::size_t n_valid() const noexcept { return abs_err_.size(); }
  MetricsReport report() const;

 private:
  EvalOptions opts_;
  // Per-pixel terms, in insertion order.
  std::vector<double> abs_err_, sq_err_;
  std::vector<double> rel_abs_, rel_sq_, log_diff_, log10_abs_;
};

/// Sum by recursive halving; fixed order, independent of threads.
double pairwise_sum(std::span<const double> values);

/// mean(d^2) - lambda * mean(d)^2 over log differences d.
double silog_from_log_diffs(std::span<const double> d, double lambda);

/// 100 * sqrt(silog), a common presentation scale.
double silog_presentation(double silog);

}  // namespace filmetric
