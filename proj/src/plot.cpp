#include "filmetric/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "filmetric/config_json.hpp"
#include "filmetric/error.hpp"

namespace filmetric {

namespace {

constexpr double kW = 720, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0) / (y1 - y0) * (kH - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.05;
    lo -= pad;
    hi += pad;
  }
}

void axes(std::ostringstream& o, const Frame& f, const std::string& title, const std::string& xl,
          const std::string& yl) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(title) << "</text>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight
    << "\" y2=\"" << kH - kBottom << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
    << kH - kBottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0, yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    o << "<text x=\"" << f.px(xv) << "\" y=\"" << kH - kBottom + 16
      << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">"
      << num(yv) << "</text>\n";
  }
  o << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">"
    << escape(xl) << "</text>\n";
  o << "<text transform=\"translate(16," << kH / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(yl) << "</text>\n";
}

}  // namespace

Histogram histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (!(hi > lo) || bins == 0) throw ConfigError("histogram needs hi > lo and bins > 0");
  Histogram h;
  h.lo = lo;
  h.bin_width = (hi - lo) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (v < lo) {
      ++h.below;
    } else if (v > hi) {
      ++h.above;
    } else {
      const auto b = std::min(static_cast<std::size_t>((v - lo) / h.bin_width), bins - 1);
      ++h.counts[b];
    }
  }
  return h;
}

std::string svg_line_plot(const std::vector<Series>& series, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel) {
  Frame f{0, 1, 0, 1};
  bool any = false;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ConfigError("series x and y differ in length");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        f = {s.x[i], s.x[i], s.y[i], s.y[i]};
        any = true;
      }
      f.x0 = std::min(f.x0, s.x[i]);
      f.x1 = std::max(f.x1, s.x[i]);
      f.y0 = std::min(f.y0, s.y[i]);
      f.y1 = std::max(f.y1, s.y[i]);
    }
  }
  widen(f.x0, f.x1);
  widen(f.y0, f.y1);
  std::ostringstream o;
  axes(o, f, title, xlabel, ylabel);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      o << num(f.px(s.x[i])) << "," << num(f.py(s.y[i])) << " ";
    o << "\"/>\n";
    o << "<text x=\"" << kW - kRight - 4 << "\" y=\"" << kTop + 14 * (k + 1)
      << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string svg_histogram(const Histogram& h, const std::string& title, const std::string& xlabel) {
  const double top = h.counts.empty() ? 1.0
                                      : static_cast<double>(*std::max_element(h.counts.begin(), h.counts.end()));
  Frame f{h.lo, h.lo + h.bin_width * static_cast<double>(h.counts.size()), 0.0, std::max(top, 1.0)};
  std::ostringstream o;
  axes(o, f, title, xlabel, "count");
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double x0 = f.px(h.lo + h.bin_width * b), x1 = f.px(h.lo + h.bin_width * (b + 1));
    const double y = f.py(static_cast<double>(h.counts[b]));
    o << "<rect x=\"" << num(x0) << "\" y=\"" << num(y) << "\" width=\"" << num(std::max(x1 - x0 - 1, 0.5))
      << "\" height=\"" << num(kH - kBottom - y) << "\" fill=\"#1f77b4\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_line_plot(const std::filesystem::path& stem, const std::vector<Series>& series,
                     const std::string& title, const std::string& xlabel,
                     const std::string& ylabel) {
  std::ostringstream csv;
  csv << "series,x,y\n";
  char buf[96];
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", s.x[i], s.y[i]);
      csv << s.name << buf;
    }
  auto svg = stem, csvp = stem;
  svg += ".svg";
  csvp += ".csv";
  write_text_atomic(csvp, csv.str());
  write_text_atomic(svg, svg_line_plot(series, title, xlabel, ylabel));
}

void write_histogram(const std::filesystem::path& stem, const Histogram& h,
                     const std::string& title, const std::string& xlabel) {
  std::ostringstream csv;
  csv << "bin_lo,bin_hi,count\n";
  char buf[96];
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu\n", h.lo + h.bin_width * b,
                  h.lo + h.bin_width * (b + 1), h.counts[b]);
    csv << buf;
  }
  auto svg = stem, csvp = stem;
  svg += ".svg";
  csvp += ".csv";
  write_text_atomic(csvp, csv.str());
  write_text_atomic(svg, svg_histogram(h, title, xlabel));
}

Interferogram colormap_strip(const Colormap& colormap, int height) {
  if (height < 1) throw ConfigError("strip height must be >= 1");
  const int w = static_cast<int>(colormap.size());
  Interferogram img(w, height);
  for (int c = 0; c < w; ++c) {
    const RgbF& v = colormap.sample(static_cast<std::size_t>(c));
    Rgb8 px;
    for (int k = 0; k < 3; ++k)
      px[k] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * v[k]), 0L, 255L));
    for (int r = 0; r < height; ++r) img.set_pixel(r, c, px);
  }
  return img;
}

}  // namespace filmetric
