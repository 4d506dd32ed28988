#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "filmetric/image.hpp"
#include "filmetric/optics.hpp"
#include "filmetric/rng.hpp"

namespace filmetric {

/// Pixel (i, j) = round(255 * colormap.lookup(field(i, j))).
Interferogram render(const ThicknessField& field, const Colormap& colormap);

/// Every op is off by default; `full_defaults()` turns them all on.
/// Geometric ops touch image, field and mask alike. Photometric ops touch
/// the image only.
struct AugmentConfig {
  bool five_crop = false;
  int crop_size = 128;

  bool flips = false;
  double p_hflip = 0.5;
  double p_vflip = 0.5;

  bool pupil_mask = false;
  double p_pupil = 0.5;
  double pupil_diameter_min_px = 30.0;
  double pupil_diameter_max_px = 50.0;

  bool shadow = false;
  double p_shadow = 0.5;
  double shadow_min_factor = 0.5;  // ramp end factor drawn from [this, 1]

  bool blur = false;
  double p_blur = 0.5;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 3.0;

  bool color_jitter = false;
  double p_jitter = 0.5;
  double brightness = 0.2;
  double contrast = 0.2;
  double saturation = 0.2;
  double hue = 0.02;  // fraction of a full hue turn

  bool gaussian_noise = false;
  double p_gaussian_noise = 0.5;
  double noise_std = 10.0;  // 8-bit units

  bool poisson_noise = false;
  double p_poisson_noise = 0.5;
  double poisson_lambda = 15.0;

  bool mean_filter = false;
  double p_mean_filter = 0.5;

  std::uint64_t seed = 0;

  static AugmentConfig full_defaults();
  void validate() const;
  bool any_enabled() const;
};

/// One applied augmentation with its drawn parameters, for metadata.
struct AppliedOp {
  std::string name;
  std::vector<double> params;
};

struct AugmentedSample {
  Interferogram image;
  ThicknessField field;
  ValidityMask mask;
  std::vector<AppliedOp> ops;
};

/// Geometric ops first (flips, then five-crop), then per output: shadow,
/// blur, colour jitter, gaussian noise, poisson noise, mean filter, pupil
/// mask. Returns 5 samples with five-crop (corners then centre), else 1.
std::vector<AugmentedSample> augment(const Interferogram& image, const ThicknessField& field,
                                     const ValidityMask& mask, const AugmentConfig& cfg);
std::vector<AugmentedSample> augment(const Interferogram& image, const ThicknessField& field,
                                     const AugmentConfig& cfg);

// Individual ops. All outputs are clamped to [0, 255].

Interferogram flip_horizontal(const Interferogram& img);
Interferogram flip_vertical(const Interferogram& img);
ThicknessField flip_horizontal(const ThicknessField& field);
ThicknessField flip_vertical(const ThicknessField& field);
ValidityMask flip_horizontal(const ValidityMask& mask);
ValidityMask flip_vertical(const ValidityMask& mask);

Interferogram crop(const Interferogram& img, int x0, int y0, int size);
ThicknessField crop(const ThicknessField& field, int x0, int y0, int size);
ValidityMask crop(const ValidityMask& mask, int x0, int y0, int size);

/// Top-left corners of the five crops: TL, TR, BL, BR, centre.
std::vector<std::pair<int, int>> five_crop_origins(int width, int height, int size);

Interferogram gaussian_blur(const Interferogram& img, double sigma);
Interferogram mean_filter3(const Interferogram& img);
/// Multiplies by a linear ramp from 1 to `end_factor` along `angle_rad`.
Interferogram shadow(const Interferogram& img, double angle_rad, double end_factor);
Interferogram color_jitter(const Interferogram& img, double brightness_factor,
                           double contrast_factor, double saturation_factor, double hue_shift);
Interferogram add_gaussian_noise(const Interferogram& img, double stddev, Rng& rng);
/// Zero-mean shot noise: each channel gets k - lambda with k ~ Poisson(lambda).
Interferogram add_poisson_noise(const Interferogram& img, double lambda, Rng& rng);
/// Blackens a disk in the image and marks it invalid in the mask.
void apply_pupil_mask(Interferogram& img, ValidityMask& mask, double center_x,
                      double center_y, double diameter);

}  // namespace filmetric
