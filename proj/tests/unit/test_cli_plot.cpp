#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "filmetric/error.hpp"
#include "filmetric/optics.hpp"
#include "filmetric/plot.hpp"
#include "helpers.hpp"

using namespace filmetric;

namespace {

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Plot, HistogramBinsAndOverflow) {
  const std::vector<double> v{-1.0, 0.0, 0.5, 0.99, 1.0, 2.5, 4.0, 4.5};
  const auto h = histogram(v, 0.0, 4.0, 4);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{3, 1, 1, 1}));  // 4.0 lands in the last bin
  EXPECT_EQ(h.below, 1u);
  EXPECT_EQ(h.above, 1u);
  EXPECT_THROW(histogram(v, 1.0, 1.0, 4), ConfigError);
  EXPECT_THROW(histogram(v, 0.0, 1.0, 0), ConfigError);
}

TEST(Plot, HistogramCsvTwin) {
  testutil::TempDir tmp("plot");
  const std::vector<double> v{1, 2, 2, 3, 3, 3};
  write_histogram(tmp.path() / "h", histogram(v, 0.0, 4.0, 4), "t", "x");
  const auto rows = lines_of(tmp.path() / "h.csv");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "bin_lo,bin_hi,count");
  EXPECT_EQ(rows[2], "1,2,1");
  EXPECT_EQ(rows[4], "3,4,3");
  std::ifstream svg(tmp.path() / "h.svg");
  std::stringstream s;
  s << svg.rdbuf();
  EXPECT_NE(s.str().find("<svg"), std::string::npos);
  EXPECT_NE(s.str().find("</svg>"), std::string::npos);
}

TEST(Plot, LinePlotCsvTwinAndEscaping) {
  testutil::TempDir tmp("plot");
  const std::vector<Series> series{{"a", {0, 1, 2}, {10, 11, 12.5}}, {"b", {0}, {3}}};
  write_line_plot(tmp.path() / "p", series, "x < y & z", "frame", "nm");
  const auto rows = lines_of(tmp.path() / "p.csv");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "series,x,y");
  EXPECT_EQ(rows[3], "a,2,12.5");
  EXPECT_EQ(rows[4], "b,0,3");
  const auto svg = svg_line_plot(series, "x < y & z", "frame", "nm");
  EXPECT_NE(svg.find("x &lt; y &amp; z"), std::string::npos);
  EXPECT_EQ(svg.find("x < y"), std::string::npos);
}

TEST(Plot, ColormapStripMatchesTable) {
  const auto cm = build_colormap(FilmStack{}, SpectralSetup::defaults(), ThicknessGrid{0.0, 10.0, 401});
  const auto strip = colormap_strip(cm, 5);
  EXPECT_EQ(strip.width(), 401);
  EXPECT_EQ(strip.height(), 5);
  for (int c = 0; c < 401; c += 37)
    for (int k = 0; k < 3; ++k) {
      const double v = 255.0 * cm.sample(c)[k];
      EXPECT_LE(std::abs(strip.pixel(4, c)[k] - v), 0.5);
      EXPECT_EQ(strip.pixel(0, c)[k], strip.pixel(4, c)[k]);
    }
  EXPECT_THROW(colormap_strip(cm, 0), ConfigError);
}
