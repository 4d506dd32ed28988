#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "filmetric/error.hpp"
#include "filmetric/fieldgen.hpp"

using namespace filmetric;

namespace {

double mean_gradient(const ThicknessField& f) {
  double acc = 0.0;
  std::size_t n = 0;
  for (int r = 0; r + 1 < f.height(); ++r)
    for (int c = 0; c + 1 < f.width(); ++c) {
      acc += std::hypot(f.at(r, c + 1) - f.at(r, c), f.at(r + 1, c) - f.at(r, c));
      ++n;
    }
  return acc / static_cast<double>(n);
}

double max_step(const ThicknessField& f) {
  double m = 0.0;
  for (int r = 0; r < f.height(); ++r)
    for (int c = 0; c < f.width(); ++c) {
      if (c + 1 < f.width()) m = std::max(m, std::abs(f.at(r, c + 1) - f.at(r, c)));
      if (r + 1 < f.height()) m = std::max(m, std::abs(f.at(r + 1, c) - f.at(r, c)));
    }
  return m;
}

}  // namespace

TEST(Perlin, SingleOctaveSpansUnitInterval) {
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    PerlinParams p;
    p.octaves = 1;
    p.seed = seed;
    const auto f = gen_perlin(p, 64, 48);
    EXPECT_EQ(f.width(), 64);
    EXPECT_EQ(f.height(), 48);
    EXPECT_EQ(f.min(), 0.0);
    EXPECT_EQ(f.max(), 1.0);
  }
}

TEST(Perlin, DeterministicInSeed) {
  PerlinParams p;
  p.octaves = 6;
  p.seed = 1234;
  EXPECT_EQ(gen_perlin(p, 64, 64), gen_perlin(p, 64, 64));
  PerlinParams q = p;
  q.seed = 1235;
  EXPECT_NE(gen_perlin(p, 64, 64), gen_perlin(q, 64, 64));
}

TEST(Perlin, MoreOctavesMoreDetail) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    PerlinParams one, eight;
    one.octaves = 1;
    eight.octaves = 8;
    one.scale_px = eight.scale_px = 100.0;
    one.seed = eight.seed = seed;
    EXPECT_GT(mean_gradient(gen_perlin(eight, 128, 128)), mean_gradient(gen_perlin(one, 128, 128)));
  }
}

TEST(Perlin, StepsBoundedForSampledScales) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PerlinParams p;
    p.octaves = 1 + static_cast<int>(seed % 8);
    p.scale_px = 40.0 + 5.5 * static_cast<double>(seed);
    p.seed = seed;
    EXPECT_LT(max_step(gen_perlin(p, 128, 128)), 0.5);
  }
}

TEST(Perlin, RejectsInvalidParams) {
  PerlinParams p;
  p.octaves = 0;
  EXPECT_THROW(gen_perlin(p, 32, 32), ConfigError);
  p = {};
  p.scale_px = 0.0;
  EXPECT_THROW(gen_perlin(p, 32, 32), ConfigError);
  EXPECT_THROW(gen_perlin(PerlinParams{}, 8, 32), ConfigError);
}

TEST(Gaussian, MatchesDrawnPeaks) {
  GaussianParams p;
  p.n_peaks = 40;
  p.seed = 5;
  const auto peaks = draw_gaussian_peaks(p, 48, 40);
  ASSERT_EQ(peaks.size(), 40u);
  // Direct double loop, normalized here.
  std::vector<double> v(48 * 40, 0.0);
  for (const auto& k : peaks) {
    EXPECT_GE(k.amplitude, 0.3);
    EXPECT_LE(k.amplitude, 1.0);
    EXPECT_GE(k.sigma_x, 0.1 * 48);
    EXPECT_LE(k.sigma_x, 0.5 * 48);
    EXPECT_GE(k.sigma_y, 0.1 * 48);
    EXPECT_LE(k.sigma_y, 0.5 * 48);
    for (int r = 0; r < 40; ++r)
      for (int c = 0; c < 48; ++c)
        v[r * 48 + c] += k.amplitude * std::exp(-0.5 * (std::pow((c - k.center_x) / k.sigma_x, 2) +
                                                        std::pow((r - k.center_y) / k.sigma_y, 2)));
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double l = *lo, h = *hi;
  const auto f = gen_gaussian(p, 48, 40);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(f[i], (v[i] - l) / (h - l), 1e-12);
}

TEST(Gaussian, SingleCenteredBumpIsSymmetric) {
  const GaussianPeak peak{32.0, 32.0, 8.0, 8.0, 1.0};
  const auto f = sum_gaussian_peaks(std::span(&peak, 1), 65, 65);
  int br = 0, bc = 0;
  for (int r = 0; r < 65; ++r)
    for (int c = 0; c < 65; ++c)
      if (f.at(r, c) > f.at(br, bc)) br = r, bc = c;
  EXPECT_EQ(br, 32);
  EXPECT_EQ(bc, 32);
  for (int r = 0; r < 65; ++r)
    for (int c = 0; c < 65; ++c) {
      EXPECT_NEAR(f.at(r, c), f.at(c, r), 1e-15);
      EXPECT_NEAR(f.at(r, c), f.at(64 - r, c), 1e-15);
    }
}

TEST(Gaussian, DeterministicInSeed) {
  GaussianParams p;
  p.seed = 77;
  EXPECT_EQ(gen_gaussian(p, 32, 32), gen_gaussian(p, 32, 32));
}

TEST(Gaussian, ManyPeaksAverageOut) {
  // Coefficient of variation of the raw superposition shrinks with peak count.
  auto cv2 = [](int n) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      GaussianParams p;
      p.n_peaks = n;
      p.seed = 1000 + seed;
      const auto raw = sum_gaussian_peaks(draw_gaussian_peaks(p, 64, 64), 64, 64);
      const auto v = raw.values();
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      var /= v.size();
      acc += var / (mean * mean);
    }
    return acc / 50.0;
  };
  EXPECT_LT(cv2(250), cv2(30));
}

TEST(Gaussian, RejectsInvalidParams) {
  GaussianParams p;
  p.n_peaks = 0;
  EXPECT_THROW(gen_gaussian(p, 32, 32), ConfigError);
  p = {};
  p.sigma_min = 0.6;
  p.sigma_max = 0.5;
  EXPECT_THROW(gen_gaussian(p, 32, 32), ConfigError);
}

TEST(Range, OutputSatisfiesConstraint) {
  PerlinParams p;
  p.seed = 3;
  const auto unit = gen_perlin(p, 32, 32);
  const RangeConstraint rc;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto d = draw_range(rc, s);
    const auto f = apply_range(unit, rc, s);
    EXPECT_GE(f.min(), 0.0);
    EXPECT_LE(f.max(), 4000.0);
    EXPECT_GE(f.max() - f.min(), 250.0 - 1e-9);
    EXPECT_LE(f.max() - f.min(), 2500.0 + 1e-9);
    EXPECT_DOUBLE_EQ(f.min(), d.offset_nm);
    EXPECT_NEAR(f.max(), d.offset_nm + d.span_nm, 1e-9);
  }
}

TEST(Range, DegenerateConstraintHasOneOutcome) {
  PerlinParams p;
  p.seed = 4;
  const auto unit = gen_perlin(p, 32, 32);
  const RangeConstraint rc{500.0, 1500.0, 1000.0, 1000.0};
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto f = apply_range(unit, rc, s);
    EXPECT_EQ(f.min(), 500.0);
    EXPECT_EQ(f.max(), 1500.0);
  }
}

TEST(Range, MidpointSupport) {
  // offset + span/2 lies in [span_min/2, abs_max - span_min/2] = [125, 3875].
  const RangeConstraint rc;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto d = draw_range(rc, s);
    const double mid = d.offset_nm + 0.5 * d.span_nm;
    EXPECT_GE(mid, 125.0);
    EXPECT_LE(mid, 3875.0);
  }
}

TEST(Range, MeanThicknessHistogramIsInteriorUnimodal) {
  const RangeConstraint rc;
  FieldSampling fs;
  Rng rng(2024);
  std::vector<int> bins(8, 0);  // 500 nm wide over [0, 4000]
  for (int i = 0; i < 10000; ++i) {
    const auto unit = i % 2 ? gen_gaussian(fs.sample_gaussian(rng), 32, 32)
                            : gen_perlin(fs.sample_perlin(rng), 32, 32);
    const double m = apply_range(unit, rc, rng()).mean();
    ASSERT_GT(m, 0.0);
    ASSERT_LT(m, 4000.0);
    ++bins[std::min(7, static_cast<int>(m / 500.0))];
  }
  const int mode = static_cast<int>(std::max_element(bins.begin(), bins.end()) - bins.begin());
  EXPECT_GT(mode, 0);
  EXPECT_LT(mode, 7);
  // Counts rise to the mode and fall after it, up to sampling noise.
  for (int b = 1; b <= mode; ++b) EXPECT_GE(bins[b] + 150, bins[b - 1]) << b;
  for (int b = mode + 1; b < 8; ++b) EXPECT_LE(bins[b], bins[b - 1] + 150) << b;
}

TEST(Range, SpanEnsembleSupport) {
  const RangeConstraint rc;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto d = draw_range(rc, s);
    EXPECT_GE(d.span_nm, 250.0);
    EXPECT_LE(d.span_nm, 2500.0);
    EXPECT_GE(d.offset_nm, 0.0);
    EXPECT_LE(d.offset_nm + d.span_nm, 4000.0);
  }
}

TEST(Range, RejectsInfeasibleOrNonUnit) {
  EXPECT_THROW(draw_range(RangeConstraint{0.0, 1000.0, 250.0, 2500.0}, 1), ConfigError);
  EXPECT_THROW(draw_range(RangeConstraint{100.0, 50.0, 10.0, 20.0}, 1), ConfigError);
  ThicknessField f(16, 16, 2.0);
  EXPECT_THROW(apply_range(f, RangeConstraint{}, 1), ConfigError);
  ThicknessField flat(16, 16, 0.5);
  EXPECT_THROW(normalize_unit(flat), NumericalError);
}

TEST(Sampling, DrawsWithinConfiguredRanges) {
  FieldSampling fs;
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    const auto p = fs.sample_perlin(rng);
    EXPECT_GE(p.octaves, 1);
    EXPECT_LE(p.octaves, 8);
    EXPECT_GE(p.scale_px, 40.0);
    EXPECT_LE(p.scale_px, 150.0);
    EXPECT_EQ(p.persistence, 0.5);
    EXPECT_EQ(p.lacunarity, 1.8);
    const auto g = fs.sample_gaussian(rng);
    EXPECT_GE(g.n_peaks, 30);
    EXPECT_LE(g.n_peaks, 250);
  }
}
