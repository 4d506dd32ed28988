#include "filmetric/fieldgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "filmetric/error.hpp"

namespace filmetric {

namespace {

// Classic 2D gradient noise on a 256-periodic lattice: permutation table and
// unit gradient directions both drawn from the field seed.
class GradientNoise {
 public:
  explicit GradientNoise(Rng& rng) {
    for (int i = 0; i < 256; ++i) perm_[i] = static_cast<std::uint8_t>(i);
    for (int i = 255; i > 0; --i) std::swap(perm_[i], perm_[uniform_int(rng, 0, i)]);
    for (int i = 0; i < 256; ++i) perm_[256 + i] = perm_[i];
    for (auto& g : grad_) {
      const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      g = {std::cos(angle), std::sin(angle)};
    }
  }

  double operator()(double x, double y) const {
    const double fx0 = std::floor(x), fy0 = std::floor(y);
    const int xi = static_cast<int>(fx0) & 255;
    const int yi = static_cast<int>(fy0) & 255;
    const double dx = x - fx0, dy = y - fy0;

    const double n00 = dot(hash(xi, yi), dx, dy);
    const double n10 = dot(hash(xi + 1, yi), dx - 1.0, dy);
    const double n01 = dot(hash(xi, yi + 1), dx, dy - 1.0);
    const double n11 = dot(hash(xi + 1, yi + 1), dx - 1.0, dy - 1.0);

    const double u = fade(dx), v = fade(dy);
    const double nx0 = n00 + u * (n10 - n00);
    const double nx1 = n01 + u * (n11 - n01);
    return nx0 + v * (nx1 - nx0);
  }

 private:
  static double fade(double t) { return t * t * t * (t * (6.0 * t - 15.0) + 10.0); }

  const std::array<double, 2>& hash(int x, int y) const {
    return grad_[perm_[perm_[x & 255] + (y & 255)]];
  }

  static double dot(const std::array<double, 2>& g, double x, double y) {
    return g[0] * x + g[1] * y;
  }

  std::array<std::uint8_t, 512> perm_{};
  std::array<std::array<double, 2>, 256> grad_{};
};

void check_dims(int width, int height) {
  if (width < 16 || height < 16)
    throw ConfigError("field dimensions must be at least 16x16, got " + std::to_string(width) +
                      "x" + std::to_string(height));
}

}  // namespace

void PerlinParams::validate() const {
  if (!(persistence > 0.0)) throw ConfigError("perlin persistence must be positive");
  if (!(lacunarity >= 1.0)) throw ConfigError("perlin lacunarity must be >= 1");
  if (octaves < 1 || octaves > 16) throw ConfigError("perlin octaves must lie in [1, 16]");
  if (!(scale_px > 0.0)) throw ConfigError("perlin scale must be positive");
}

void GaussianParams::validate() const {
  if (n_peaks < 1) throw ConfigError("gaussian profile needs at least one peak");
  if (!(sigma_min > 0.0 && sigma_min <= sigma_max))
    throw ConfigError("gaussian widths must satisfy 0 < sigma_min <= sigma_max");
}

void RangeConstraint::validate() const {
  if (!(abs_min_nm >= 0.0 && abs_min_nm < abs_max_nm))
    throw ConfigError("range constraint needs 0 <= abs_min < abs_max");
  if (abs_max_nm > kMaxThicknessNm) throw ConfigError("range constraint abs_max exceeds 5000 nm");
  if (!(span_min_nm > 0.0 && span_min_nm <= span_max_nm))
    throw ConfigError("range constraint needs 0 < span_min <= span_max");
  if (span_max_nm > abs_max_nm - abs_min_nm)
    throw ConfigError("range constraint infeasible: span_max exceeds abs_max - abs_min");
}

void FieldSampling::validate() const {
  if (octaves_min < 1 || octaves_min > octaves_max) throw ConfigError("bad octave range");
  if (!(scale_min_px > 0.0 && scale_min_px <= scale_max_px)) throw ConfigError("bad scale range");
  if (peaks_min < 1 || peaks_min > peaks_max) throw ConfigError("bad peak count range");
  if (!(sigma_min > 0.0 && sigma_min <= sigma_max)) throw ConfigError("bad sigma range");
}

PerlinParams FieldSampling::sample_perlin(Rng& rng) const {
  PerlinParams p;
  p.octaves = uniform_int(rng, octaves_min, octaves_max);
  p.scale_px = uniform(rng, scale_min_px, scale_max_px);
  p.seed = rng();
  return p;
}

GaussianParams FieldSampling::sample_gaussian(Rng& rng) const {
  GaussianParams p;
  p.n_peaks = uniform_int(rng, peaks_min, peaks_max);
  p.sigma_min = sigma_min;
  p.sigma_max = sigma_max;
  p.seed = rng();
  return p;
}

void normalize_unit(ThicknessField& field) {
  const double lo = field.min(), hi = field.max();
  if (!(hi > lo) || !std::isfinite(hi - lo))
    throw NumericalError("cannot normalize a flat or non-finite field");
  const double range = hi - lo;
  for (double& v : field.values()) v = (v - lo) / range;
}

ThicknessField gen_perlin(const PerlinParams& params, int width, int height) {
  params.validate();
  check_dims(width, height);
  Rng rng(params.seed);
  const GradientNoise noise(rng);

  ThicknessField field(width, height, 0.0);
  double frequency = 1.0 / params.scale_px;
  double amplitude = 1.0;
  for (int k = 0; k < params.octaves; ++k) {
    // Random lattice offset per octave so octaves do not share a lattice origin.
    const double ox = uniform(rng, 0.0, 256.0);
    const double oy = uniform(rng, 0.0, 256.0);
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        field.at(r, c) += amplitude * noise((c + 0.5) * frequency + ox, (r + 0.5) * frequency + oy);
    frequency *= params.lacunarity;
    amplitude *= params.persistence;
  }
  normalize_unit(field);
  return field;
}

std::vector<GaussianPeak> draw_gaussian_peaks(const GaussianParams& params, int width,
                                              int height) {
  params.validate();
  check_dims(width, height);
  Rng rng(params.seed);
  std::vector<GaussianPeak> peaks(static_cast<std::size_t>(params.n_peaks));
  for (auto& p : peaks) {
    p.center_x = uniform(rng, 0.0, width);
    p.center_y = uniform(rng, 0.0, height);
    p.sigma_x = uniform(rng, params.sigma_min, params.sigma_max) * width;
    p.sigma_y = uniform(rng, params.sigma_min, params.sigma_max) * width;
    p.amplitude = uniform(rng, 0.3, 1.0);
  }
  return peaks;
}

ThicknessField sum_gaussian_peaks(std::span<const GaussianPeak> peaks, int width, int height) {
  ThicknessField field(width, height, 0.0);
  std::vector<double> ex(static_cast<std::size_t>(width)), ey(static_cast<std::size_t>(height));
  // Bumps are axis-aligned, hence separable.
  for (const auto& p : peaks) {
    for (int c = 0; c < width; ++c) {
      const double d = (c - p.center_x) / p.sigma_x;
      ex[c] = std::exp(-0.5 * d * d);
    }
    for (int r = 0; r < height; ++r) {
      const double d = (r - p.center_y) / p.sigma_y;
      ey[r] = p.amplitude * std::exp(-0.5 * d * d);
    }
    for (int r = 0; r < height; ++r) {
      double* row = &field.at(r, 0);
      const double wy = ey[r];
      for (int c = 0; c < width; ++c) row[c] += wy * ex[c];
    }
  }
  return field;
}

ThicknessField gen_gaussian(const GaussianParams& params, int width, int height) {
  const auto peaks = draw_gaussian_peaks(params, width, height);
  ThicknessField field = sum_gaussian_peaks(peaks, width, height);
  normalize_unit(field);
  return field;
}

RangeDraw draw_range(const RangeConstraint& constraint, std::uint64_t seed) {
  constraint.validate();
  Rng rng(seed);
  RangeDraw d;
  d.span_nm = constraint.span_min_nm == constraint.span_max_nm
                  ? constraint.span_min_nm
                  : uniform(rng, constraint.span_min_nm, constraint.span_max_nm);
  const double top = constraint.abs_max_nm - d.span_nm;
  d.offset_nm = top <= constraint.abs_min_nm ? constraint.abs_min_nm
                                             : uniform(rng, constraint.abs_min_nm, top);
  return d;
}

ThicknessField apply_range(const ThicknessField& unit_field, const RangeDraw& draw,
                           double abs_max_nm) {
  ThicknessField out = unit_field;
  for (double& v : out.values()) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError("apply_range expects a unit-normalized field");
    v = std::min(draw.offset_nm + draw.span_nm * v, abs_max_nm);
  }
  return out;
}

ThicknessField apply_range(const ThicknessField& unit_field, const RangeConstraint& constraint,
                           std::uint64_t seed) {
  return apply_range(unit_field, draw_range(constraint, seed), constraint.abs_max_nm);
}

}  // namespace filmetric
