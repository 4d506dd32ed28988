#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace filmetric {

/// A non-negative function of wavelength sampled on an ascending grid.
/// Linear interpolation between samples, zero outside the sampled range.
class SpectralCurve {
 public:
  SpectralCurve(std::vector<double> wavelengths_nm, std::vector<double> values);

  double operator()(double wavelength_nm) const;

  std::span<const double> wavelengths() const noexcept { return wavelengths_; }
  std::span<const double> values() const noexcept { return values_; }
  double min_wavelength() const noexcept { return wavelengths_.front(); }
  double max_wavelength() const noexcept { return wavelengths_.back(); }

  SpectralCurve scaled(double factor) const;

  /// Two-column text: `wavelength_nm<TAB>value`, `#` starts a comment.
  static SpectralCurve load(const std::filesystem::path& path);
  static SpectralCurve parse(const std::string& text);
  void save(const std::filesystem::path& path, const std::string& comment = {}) const;

 private:
  std::vector<double> wavelengths_;
  std::vector<double> values_;
};

/// Ambient / film / substrate, lossless and dispersion-free.
struct FilmStack {
  double n_ambient = 1.0;
  double n_film = 1.337;       // tear fluid
  double n_substrate = 1.42;   // hydrogel contact lens
  double incidence_angle_deg = 0.0;

  /// Throws ConfigError on indices < 1, angles outside [0, 90), or a
  /// geometry with total internal reflection at either interface.
  void validate() const;

  double film_cos_theta() const;

  /// Thickness period of the reflectance at `wavelength_nm`.
  double period_nm(double wavelength_nm) const;
};

/// Unpolarized reflectance |r|^2 (mean of s and p) of the three-layer stack,
/// multiple internal reflections included.
double reflectance(const FilmStack& stack, double wavelength_nm, double thickness_nm);

struct ThicknessGrid {
  double min_nm = 0.0;
  double step_nm = 1.0;
  std::size_t count = 5001;

  double max_nm() const { return min_nm + step_nm * static_cast<double>(count - 1); }
  double at(std::size_t i) const { return min_nm + step_nm * static_cast<double>(i); }
  void validate() const;
};

/// Illuminant, optical filter and the camera's red/green/blue sensitivities.
struct SpectralSetup {
  SpectralCurve illuminant;
  SpectralCurve filter;
  std::array<SpectralCurve, 3> sensitivities;

  /// Flat white light, tri-band filter (460/540/620 nm, FWHM 25 nm) and
  /// Gaussian sensitivities at the same centers (FWHM 60 nm), 380-780 nm.
  static SpectralSetup defaults();

  /// Single-wavelength illumination at `wavelength_nm` (integer nm), with
  /// the default filter and sensitivities.
  static SpectralSetup monochromatic(double wavelength_nm);
};

SpectralCurve gaussian_bands(std::span<const double> centers_nm, double fwhm_nm,
                             double lo_nm = 380.0, double hi_nm = 780.0,
                             double step_nm = 1.0);

using RgbF = std::array<double, 3>;

/// Thickness -> RGB lookup table on a uniform grid.
class Colormap {
 public:
  Colormap(ThicknessGrid grid, std::vector<RgbF> rgb, std::string normalization_note);

  const ThicknessGrid& grid() const noexcept { return grid_; }
  std::span<const RgbF> rgb() const noexcept { return rgb_; }
  const RgbF& sample(std::size_t i) const { return rgb_[i]; }
  std::size_t size() const noexcept { return rgb_.size(); }
  const std::string& normalization_note() const noexcept { return note_; }

  /// Linear interpolation; exact at grid nodes. Throws ConfigError outside
  /// the grid.
  RgbF lookup(double thickness_nm) const;

  /// Versioned text form; 9 significant digits per value.
  std::string serialize() const;
  static Colormap deserialize(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Colormap load(const std::filesystem::path& path);
  void save_csv(const std::filesystem::path& path) const;

 private:
  ThicknessGrid grid_;
  std::vector<RgbF> rgb_;
  std::string note_;
};

/// Channel c at thickness h is the trapezoidal integral over the merged
/// wavelength grid of illuminant * filter * sensitivity_c * reflectance(h);
/// all channels are then divided by the single global maximum.
Colormap build_colormap(const FilmStack& stack, const SpectralSetup& setup,
                        const ThicknessGrid& grid = {}, int threads = 1);

/// Unnormalized channel weights: integral of illuminant * filter *
/// sensitivity_c over the merged grid.
RgbF channel_weights(const SpectralSetup& setup);

}  // namespace filmetric
