#include "filmetric/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "filmetric/error.hpp"

namespace filmetric {

namespace {

std::size_t checked_area(int width, int height) {
  if (width <= 0 || height <= 0)
    throw ConfigError("image dimensions must be positive, got " +
                      std::to_string(width) + "x" + std::to_string(height));
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace

ThicknessField::ThicknessField(int width, int height, double fill)
    : width_(width), height_(height), values_(checked_area(width, height), fill) {}

ThicknessField::ThicknessField(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (values_.size() != checked_area(width, height))
    throw ConfigError("thickness field value count does not match dimensions");
}

double ThicknessField::min() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double ThicknessField::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double ThicknessField::mean() const {
  if (values_.empty()) return 0.0;
  return std::accumulate(values_.begin(), values_.end(), 0.0) /
         static_cast<double>(values_.size());
}

void ThicknessField::validate() const {
  if (width_ < 16 || height_ < 16)
    throw ConfigError("thickness field must be at least 16x16, got " +
                      std::to_string(width_) + "x" + std::to_string(height_));
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0 || v > kMaxThicknessNm)
      throw NumericalError("thickness value out of [0, 5000] nm: " +
                           std::to_string(v));
  }
}

Interferogram::Interferogram(int width, int height, Rgb8 fill)
    : width_(width), height_(height), data_(3 * checked_area(width, height)) {
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

Interferogram::Interferogram(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), data_(std::move(rgb)) {
  if (data_.size() != 3 * checked_area(width, height))
    throw ConfigError("interferogram byte count does not match dimensions");
}

ValidityMask::ValidityMask(int width, int height, bool valid)
    : width_(width), height_(height),
      flags_(checked_area(width, height), valid ? 1 : 0) {}

ValidityMask::ValidityMask(int width, int height, std::vector<std::uint8_t> flags)
    : width_(width), height_(height), flags_(std::move(flags)) {
  if (flags_.size() != checked_area(width, height))
    throw ConfigError("validity mask size does not match dimensions");
  for (auto& f : flags_) f = f ? 1 : 0;
}

std::size_t ValidityMask::count_valid() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), 1));
}

std::vector<std::uint32_t> ValidityMask::run_lengths() const {
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 1;
  std::uint32_t length = 0;
  for (auto f : flags_) {
    if (f == current) {
      ++length;
    } else {
      runs.push_back(length);
      current = f;
      length = 1;
    }
  }
  runs.push_back(length);
  return runs;
}

ValidityMask ValidityMask::from_run_lengths(int width, int height,
                                            std::span<const std::uint32_t> runs) {
  std::vector<std::uint8_t> flags;
  flags.reserve(checked_area(width, height));
  std::uint8_t current = 1;
  for (auto run : runs) {
    flags.insert(flags.end(), run, current);
    current ^= 1;
  }
  if (flags.size() != static_cast<std::size_t>(width) * height)
    throw IoError("validity mask run lengths do not cover the image");
  return ValidityMask(width, height, std::move(flags));
}

}  // namespace filmetric
