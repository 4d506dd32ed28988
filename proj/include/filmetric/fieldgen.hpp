#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "filmetric/image.hpp"
#include "filmetric/rng.hpp"

namespace filmetric {

/// Multi-octave gradient noise. Octave k has spatial frequency
/// lacunarity^k / scale_px and amplitude persistence^k.
struct PerlinParams {
  double persistence = 0.5;
  double lacunarity = 1.8;
  int octaves = 4;
  double scale_px = 100.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Sum of randomly placed axis-aligned Gaussian bumps. Widths are fractions
/// of the image width.
struct GaussianParams {
  int n_peaks = 100;
  double sigma_min = 0.1;
  double sigma_max = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GaussianPeak {
  double center_x;  // px, column axis
  double center_y;  // px, row axis
  double sigma_x;   // px
  double sigma_y;   // px
  double amplitude;
};

/// Absolute bounds and allowed within-profile span, nm.
struct RangeConstraint {
  double abs_min_nm = 0.0;
  double abs_max_nm = 4000.0;
  double span_min_nm = 250.0;
  double span_max_nm = 2500.0;

  void validate() const;
};

/// Per-item sampling ranges for the generator parameters.
struct FieldSampling {
  int octaves_min = 1;
  int octaves_max = 8;
  double scale_min_px = 40.0;
  double scale_max_px = 150.0;
  int peaks_min = 30;
  int peaks_max = 250;
  double sigma_min = 0.1;
  double sigma_max = 0.5;

  void validate() const;
  PerlinParams sample_perlin(Rng& rng) const;
  GaussianParams sample_gaussian(Rng& rng) const;
};

/// Unit-normalized fields: min exactly 0, max exactly 1.
ThicknessField gen_perlin(const PerlinParams& params, int width, int height);
ThicknessField gen_gaussian(const GaussianParams& params, int width, int height);

/// The peaks gen_gaussian would place for `params` on a field of `width`.
std::vector<GaussianPeak> draw_gaussian_peaks(const GaussianParams& params, int width,
                                              int height);

/// Raw (unnormalized) superposition of `peaks`.
ThicknessField sum_gaussian_peaks(std::span<const GaussianPeak> peaks, int width, int height);

/// Affine rescale of a field to [0, 1]. Throws NumericalError on a flat field.
void normalize_unit(ThicknessField& field);

struct RangeDraw {
  double offset_nm;
  double span_nm;
};

/// Draws span ~ U[span_min, span_max] then offset ~ U[abs_min, abs_max - span].
RangeDraw draw_range(const RangeConstraint& constraint, std::uint64_t seed);

/// offset + span * field for a unit-normalized field.
ThicknessField apply_range(const ThicknessField& unit_field, const RangeConstraint& constraint,
                           std::uint64_t seed);
ThicknessField apply_range(const ThicknessField& unit_field, const RangeDraw& draw,
                           double abs_max_nm);

}  // namespace filmetric
