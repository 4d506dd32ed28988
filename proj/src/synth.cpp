#include "filmetric/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <span>

#include "filmetric/error.hpp"

namespace filmetric {

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

template <class T>
std::vector<T> flip_h_raw(std::span<const T> src, int w, int h, int ch) {
  std::vector<T> out(src.size());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int k = 0; k < ch; ++k)
        out[(static_cast<std::size_t>(r) * w + c) * ch + k] =
            src[(static_cast<std::size_t>(r) * w + (w - 1 - c)) * ch + k];
  return out;
}

template <class T>
std::vector<T> flip_v_raw(std::span<const T> src, int w, int h, int ch) {
  std::vector<T> out(src.size());
  const std::size_t row = static_cast<std::size_t>(w) * ch;
  for (int r = 0; r < h; ++r)
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((h - 1 - r) * row), row,
                out.begin() + static_cast<std::ptrdiff_t>(r * row));
  return out;
}

template <class T>
std::vector<T> crop_raw(std::span<const T> src, int w, int h, int ch, int x0, int y0, int size) {
  if (size < 1 || x0 < 0 || y0 < 0 || x0 + size > w || y0 + size > h)
    throw ConfigError("crop of " + std::to_string(size) + " px at (" + std::to_string(x0) +
                      ", " + std::to_string(y0) + ") exceeds " + std::to_string(w) + "x" +
                      std::to_string(h) + " image");
  std::vector<T> out(static_cast<std::size_t>(size) * size * ch);
  const std::size_t row = static_cast<std::size_t>(size) * ch;
  for (int r = 0; r < size; ++r)
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(((y0 + r) * w + x0) * ch), row,
                out.begin() + static_cast<std::ptrdiff_t>(r * row));
  return out;
}

// Mirror index into [0, n) without repeating the edge sample.
int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

// Separable convolution with a symmetric 1D kernel, reflect padding.
Interferogram convolve_separable(const Interferogram& img, std::span<const double> kernel) {
  const int w = img.width(), h = img.height();
  const int radius = static_cast<int>(kernel.size() / 2);
  const auto src = img.data();
  std::vector<double> tmp(src.size());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int k = 0; k < 3; ++k) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t)
          acc += kernel[t + radius] * src[(static_cast<std::size_t>(r) * w + reflect(c + t, w)) * 3 + k];
        tmp[(static_cast<std::size_t>(r) * w + c) * 3 + k] = acc;
      }
  std::vector<std::uint8_t> out(src.size());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int k = 0; k < 3; ++k) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t)
          acc += kernel[t + radius] * tmp[(static_cast<std::size_t>(reflect(r + t, h)) * w + c) * 3 + k];
        out[(static_cast<std::size_t>(r) * w + c) * 3 + k] = to_u8(acc);
      }
  return Interferogram(w, h, std::move(out));
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

// h in [0, 1), s, v in [0, 1]
void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d == 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = (g - b) / d / 6.0;
  } else if (mx == g) {
    h = ((b - r) / d + 2.0) / 6.0;
  } else {
    h = ((r - g) / d + 4.0) / 6.0;
  }
  h -= std::floor(h);
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  h -= std::floor(h);
  const double hh = h * 6.0;
  const int sector = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

template <class F>
Interferogram map_pixels(const Interferogram& img, F&& f) {
  Interferogram out = img;
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); i += 3) {
    double r = d[i], g = d[i + 1], b = d[i + 2];
    f(r, g, b);
    d[i] = to_u8(r);
    d[i + 1] = to_u8(g);
    d[i + 2] = to_u8(b);
  }
  return out;
}

int poisson(Rng& rng, double lambda) {
  return std::poisson_distribution<int>(lambda)(rng);
}

}  // namespace

Interferogram render(const ThicknessField& field, const Colormap& colormap) {
  Interferogram img(field.width(), field.height());
  auto out = img.data();
  const auto values = field.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const RgbF rgb = colormap.lookup(values[i]);
    for (int c = 0; c < 3; ++c) out[3 * i + c] = to_u8(255.0 * rgb[c]);
  }
  return img;
}

// ---------------------------------------------------------------- config

AugmentConfig AugmentConfig::full_defaults() {
  AugmentConfig cfg;
  cfg.five_crop = true;
  cfg.flips = true;
  cfg.pupil_mask = true;
  cfg.shadow = true;
  cfg.blur = true;
  cfg.color_jitter = true;
  cfg.gaussian_noise = true;
  cfg.poisson_noise = true;
  cfg.mean_filter = true;
  return cfg;
}

void AugmentConfig::validate() const {
  const double probs[] = {p_hflip, p_vflip, p_pupil, p_shadow, p_blur,
                          p_jitter, p_gaussian_noise, p_poisson_noise, p_mean_filter};
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augmentation probabilities must lie in [0, 1]");
  if (crop_size < 16) throw ConfigError("crop size must be at least 16 px");
  if (!(blur_sigma_min >= 0.1 && blur_sigma_min <= blur_sigma_max && blur_sigma_max <= 3.0))
    throw ConfigError("blur sigma range must lie within [0.1, 3.0]");
  if (!(pupil_diameter_min_px >= 30.0 && pupil_diameter_min_px <= pupil_diameter_max_px &&
        pupil_diameter_max_px <= 50.0))
    throw ConfigError("pupil diameter range must lie within [30, 50] px");
  if (!(shadow_min_factor >= 0.0 && shadow_min_factor <= 1.0))
    throw ConfigError("shadow factor must lie in [0, 1]");
  if (!(brightness >= 0 && contrast >= 0 && saturation >= 0 && brightness < 1 && contrast < 1 &&
        saturation < 1))
    throw ConfigError("jitter factors must lie in [0, 1)");
  if (!(hue >= 0.0 && hue <= 0.5)) throw ConfigError("hue jitter must lie in [0, 0.5]");
  if (!(noise_std >= 0.0)) throw ConfigError("noise std must be non-negative");
  if (!(poisson_lambda > 0.0)) throw ConfigError("poisson lambda must be positive");
}

bool AugmentConfig::any_enabled() const {
  return five_crop || flips || pupil_mask || shadow || blur || color_jitter || gaussian_noise ||
         poisson_noise || mean_filter;
}

// ---------------------------------------------------------------- geometric

Interferogram flip_horizontal(const Interferogram& img) {
  return Interferogram(img.width(), img.height(),
                       flip_h_raw<std::uint8_t>(img.data(), img.width(), img.height(), 3));
}
Interferogram flip_vertical(const Interferogram& img) {
  return Interferogram(img.width(), img.height(),
                       flip_v_raw<std::uint8_t>(img.data(), img.width(), img.height(), 3));
}
ThicknessField flip_horizontal(const ThicknessField& f) {
  return ThicknessField(f.width(), f.height(), flip_h_raw<double>(f.values(), f.width(), f.height(), 1));
}
ThicknessField flip_vertical(const ThicknessField& f) {
  return ThicknessField(f.width(), f.height(), flip_v_raw<double>(f.values(), f.width(), f.height(), 1));
}
ValidityMask flip_horizontal(const ValidityMask& m) {
  return ValidityMask(m.width(), m.height(), flip_h_raw<std::uint8_t>(m.flags(), m.width(), m.height(), 1));
}
ValidityMask flip_vertical(const ValidityMask& m) {
  return ValidityMask(m.width(), m.height(), flip_v_raw<std::uint8_t>(m.flags(), m.width(), m.height(), 1));
}

Interferogram crop(const Interferogram& img, int x0, int y0, int size) {
  return Interferogram(size, size,
                       crop_raw<std::uint8_t>(img.data(), img.width(), img.height(), 3, x0, y0, size));
}
ThicknessField crop(const ThicknessField& f, int x0, int y0, int size) {
  return ThicknessField(size, size, crop_raw<double>(f.values(), f.width(), f.height(), 1, x0, y0, size));
}
ValidityMask crop(const ValidityMask& m, int x0, int y0, int size) {
  return ValidityMask(size, size,
                      crop_raw<std::uint8_t>(m.flags(), m.width(), m.height(), 1, x0, y0, size));
}

std::vector<std::pair<int, int>> five_crop_origins(int width, int height, int size) {
  if (size > width || size > height)
    throw ConfigError("crop size " + std::to_string(size) + " exceeds image " +
                      std::to_string(width) + "x" + std::to_string(height));
  return {{0, 0},
          {width - size, 0},
          {0, height - size},
          {width - size, height - size},
          {(width - size) / 2, (height - size) / 2}};
}

// ---------------------------------------------------------------- photometric

Interferogram gaussian_blur(const Interferogram& img, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("blur sigma must be positive");
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    kernel[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    sum += kernel[t + radius];
  }
  for (double& k : kernel) k /= sum;
  return convolve_separable(img, kernel);
}

Interferogram mean_filter3(const Interferogram& img) {
  static constexpr double kBox[] = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return convolve_separable(img, kBox);
}

Interferogram shadow(const Interferogram& img, double angle_rad, double end_factor) {
  const double dx = std::cos(angle_rad), dy = std::sin(angle_rad);
  const int w = img.width(), h = img.height();
  // Project the four corners to find the ramp extent along the direction.
  double lo = 1e300, hi = -1e300;
  for (int cy : {0, h - 1})
    for (int cx : {0, w - 1}) {
      const double p = cx * dx + cy * dy;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
  const double extent = hi > lo ? hi - lo : 1.0;
  Interferogram out = img;
  auto d = out.data();
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double t = (c * dx + r * dy - lo) / extent;
      const double factor = 1.0 - t * (1.0 - end_factor);
      const std::size_t i = (static_cast<std::size_t>(r) * w + c) * 3;
      for (int k = 0; k < 3; ++k) d[i + k] = to_u8(d[i + k] * factor);
    }
  return out;
}

Interferogram color_jitter(const Interferogram& img, double brightness_factor,
                           double contrast_factor, double saturation_factor, double hue_shift) {
  Interferogram out = map_pixels(img, [&](double& r, double& g, double& b) {
    r *= brightness_factor;
    g *= brightness_factor;
    b *= brightness_factor;
  });

  double mean = 0.0;
  const auto d = out.data();
  for (std::size_t i = 0; i < d.size(); i += 3) mean += luma(d[i], d[i + 1], d[i + 2]);
  mean /= static_cast<double>(out.pixel_count());
  out = map_pixels(out, [&](double& r, double& g, double& b) {
    r = mean + contrast_factor * (r - mean);
    g = mean + contrast_factor * (g - mean);
    b = mean + contrast_factor * (b - mean);
  });

  out = map_pixels(out, [&](double& r, double& g, double& b) {
    const double y = luma(r, g, b);
    r = y + saturation_factor * (r - y);
    g = y + saturation_factor * (g - y);
    b = y + saturation_factor * (b - y);
  });

  if (hue_shift != 0.0) {
    out = map_pixels(out, [&](double& r, double& g, double& b) {
      double h, s, v;
      rgb_to_hsv(r / 255.0, g / 255.0, b / 255.0, h, s, v);
      hsv_to_rgb(h + hue_shift, s, v, r, g, b);
      r *= 255.0;
      g *= 255.0;
      b *= 255.0;
    });
  }
  return out;
}

Interferogram add_gaussian_noise(const Interferogram& img, double stddev, Rng& rng) {
  std::normal_distribution<double> noise(0.0, stddev);
  Interferogram out = img;
  for (auto& v : out.data()) v = to_u8(v + noise(rng));
  return out;
}

Interferogram add_poisson_noise(const Interferogram& img, double lambda, Rng& rng) {
  Interferogram out = img;
  for (auto& v : out.data()) v = to_u8(v + (poisson(rng, lambda) - lambda));
  return out;
}

void apply_pupil_mask(Interferogram& img, ValidityMask& mask, double cx, double cy,
                      double diameter) {
  const double r2 = 0.25 * diameter * diameter;
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) {
      const double dx = c - cx, dy = r - cy;
      if (dx * dx + dy * dy <= r2) {
        img.set_pixel(r, c, {0, 0, 0});
        mask.set(r, c, false);
      }
    }
}

// ---------------------------------------------------------------- pipeline

std::vector<AugmentedSample> augment(const Interferogram& image, const ThicknessField& field,
                                     const AugmentConfig& cfg) {
  return augment(image, field, ValidityMask(field.width(), field.height(), true), cfg);
}

std::vector<AugmentedSample> augment(const Interferogram& image, const ThicknessField& field,
                                     const ValidityMask& mask, const AugmentConfig& cfg) {
  cfg.validate();
  if (image.width() != field.width() || image.height() != field.height() ||
      mask.width() != field.width() || mask.height() != field.height())
    throw ConfigError("image, field and mask dimensions differ");

  Rng rng(cfg.seed);
  AugmentedSample base{image, field, mask, {}};
  if (cfg.flips) {
    if (bernoulli(rng, cfg.p_hflip)) {
      base.image = flip_horizontal(base.image);
      base.field = flip_horizontal(base.field);
      base.mask = flip_horizontal(base.mask);
      base.ops.push_back({"hflip", {}});
    }
    if (bernoulli(rng, cfg.p_vflip)) {
      base.image = flip_vertical(base.image);
      base.field = flip_vertical(base.field);
      base.mask = flip_vertical(base.mask);
      base.ops.push_back({"vflip", {}});
    }
  }

  std::vector<AugmentedSample> out;
  if (cfg.five_crop) {
    for (auto [x0, y0] : five_crop_origins(base.image.width(), base.image.height(), cfg.crop_size)) {
      AugmentedSample s{crop(base.image, x0, y0, cfg.crop_size),
                        crop(base.field, x0, y0, cfg.crop_size),
                        crop(base.mask, x0, y0, cfg.crop_size), base.ops};
      s.ops.push_back({"crop", {double(x0), double(y0), double(cfg.crop_size)}});
      out.push_back(std::move(s));
    }
  } else {
    out.push_back(std::move(base));
  }

  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& s = out[k];
    Rng prng(derive_seed(cfg.seed, k + 1));
    const int w = s.image.width(), h = s.image.height();
    if (cfg.shadow && bernoulli(prng, cfg.p_shadow)) {
      const double angle = uniform(prng, 0.0, 2.0 * std::numbers::pi);
      const double factor = uniform(prng, cfg.shadow_min_factor, 1.0);
      s.image = shadow(s.image, angle, factor);
      s.ops.push_back({"shadow", {angle, factor}});
    }
    if (cfg.blur && bernoulli(prng, cfg.p_blur)) {
      const double sigma = uniform(prng, cfg.blur_sigma_min, cfg.blur_sigma_max);
      s.image = gaussian_blur(s.image, sigma);
      s.ops.push_back({"gaussian_blur", {sigma}});
    }
    if (cfg.color_jitter && bernoulli(prng, cfg.p_jitter)) {
      const double b = uniform(prng, 1.0 - cfg.brightness, 1.0 + cfg.brightness);
      const double c = uniform(prng, 1.0 - cfg.contrast, 1.0 + cfg.contrast);
      const double sat = uniform(prng, 1.0 - cfg.saturation, 1.0 + cfg.saturation);
      const double hue = uniform(prng, -cfg.hue, cfg.hue);
      s.image = color_jitter(s.image, b, c, sat, hue);
      s.ops.push_back({"color_jitter", {b, c, sat, hue}});
    }
    if (cfg.gaussian_noise && bernoulli(prng, cfg.p_gaussian_noise)) {
      s.image = add_gaussian_noise(s.image, cfg.noise_std, prng);
      s.ops.push_back({"gaussian_noise", {cfg.noise_std}});
    }
    if (cfg.poisson_noise && bernoulli(prng, cfg.p_poisson_noise)) {
      s.image = add_poisson_noise(s.image, cfg.poisson_lambda, prng);
      s.ops.push_back({"poisson_noise", {cfg.poisson_lambda}});
    }
    if (cfg.mean_filter && bernoulli(prng, cfg.p_mean_filter)) {
      s.image = mean_filter3(s.image);
      s.ops.push_back({"mean_filter", {3.0}});
    }
    if (cfg.pupil_mask && bernoulli(prng, cfg.p_pupil)) {
      const double diameter = uniform(prng, cfg.pupil_diameter_min_px, cfg.pupil_diameter_max_px);
      const double cx = uniform(prng, 0.0, w);
      const double cy = uniform(prng, 0.0, h);
      apply_pupil_mask(s.image, s.mask, cx, cy, diameter);
      s.ops.push_back({"pupil_mask", {cx, cy, diameter}});
    }
  }
  return out;
}

}  // namespace filmetric
