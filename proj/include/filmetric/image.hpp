#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace filmetric {

/// Upper bound of representable film thickness; colormaps and fields live in
/// [0, kMaxThicknessNm].
inline constexpr double kMaxThicknessNm = 5000.0;

/// Film thickness in nm on a row-major grid.
class ThicknessField {
 public:
  ThicknessField() = default;
  ThicknessField(int width, int height, double fill = 0.0);
  ThicknessField(int width, int height, std::vector<double> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& at(int row, int col) { return values_[index(row, col)]; }
  double at(int row, int col) const { return values_[index(row, col)]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double min() const;
  double max() const;
  double mean() const;

  /// Throws NumericalError unless every value is finite and in
  /// [0, kMaxThicknessNm], and ConfigError if a side is < 16 px.
  void validate() const;

  bool operator==(const ThicknessField&) const = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

using Rgb8 = std::array<std::uint8_t, 3>;

/// 8-bit RGB image, interleaved, row-major.
class Interferogram {
 public:
  Interferogram() = default;
  Interferogram(int width, int height, Rgb8 fill = {0, 0, 0});
  Interferogram(int width, int height, std::vector<std::uint8_t> rgb);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  Rgb8 pixel(int row, int col) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(row) * width_ + col);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set_pixel(int row, int col, Rgb8 value) {
    const std::size_t i = 3 * (static_cast<std::size_t>(row) * width_ + col);
    data_[i] = value[0];
    data_[i + 1] = value[1];
    data_[i + 2] = value[2];
  }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  bool operator==(const Interferogram&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Per-pixel validity: 1 = usable, 0 = occluded/undefined.
class ValidityMask {
 public:
  ValidityMask() = default;
  ValidityMask(int width, int height, bool valid = true);
  ValidityMask(int width, int height, std::vector<std::uint8_t> flags);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return flags_.size(); }

  bool valid(std::size_t i) const { return flags_[i] != 0; }
  bool valid(int row, int col) const {
    return flags_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  void set(int row, int col, bool value) {
    flags_[static_cast<std::size_t>(row) * width_ + col] = value ? 1 : 0;
  }

  std::size_t count_valid() const;
  std::span<const std::uint8_t> flags() const noexcept { return flags_; }

  /// Run-length encoding starting with a run of valid pixels (possibly 0).
  std::vector<std::uint32_t> run_lengths() const;
  static ValidityMask from_run_lengths(int width, int height,
                                       std::span<const std::uint32_t> runs);

  bool operator==(const ValidityMask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> flags_;
};

}  // namespace filmetric
