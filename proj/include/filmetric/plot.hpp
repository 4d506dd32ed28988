#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "filmetric/image.hpp"
#include "filmetric/optics.hpp"

namespace filmetric {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct Histogram {
  double lo = 0.0;
  double bin_width = 1.0;
  std::vector<std::size_t> counts;
  std::size_t below = 0, above = 0;  // samples outside [lo, lo + bins * width)
};

/// Equal-width bins over [lo, hi); the last bin also takes hi itself.
Histogram histogram(std::span<const double> values, double lo, double hi, std::size_t bins);

std::string svg_line_plot(const std::vector<Series>& series, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel);
std::string svg_histogram(const Histogram& h, const std::string& title, const std::string& xlabel);

/// Writes `<stem>.svg` and its CSV twin `<stem>.csv` (columns: series,x,y).
void write_line_plot(const std::filesystem::path& stem, const std::vector<Series>& series,
                     const std::string& title, const std::string& xlabel,
                     const std::string& ylabel);
/// Writes `<stem>.svg` and `<stem>.csv` (columns: bin_lo,bin_hi,count).
void write_histogram(const std::filesystem::path& stem, const Histogram& h,
                     const std::string& title, const std::string& xlabel);

/// One column per grid sample, `height` rows, 8-bit.
Interferogram colormap_strip(const Colormap& colormap, int height = 48);

}  // namespace filmetric
