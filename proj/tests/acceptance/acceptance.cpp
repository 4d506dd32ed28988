// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <unistd.h>

#include "filmetric/checksum.hpp"
#include "filmetric/dataset.hpp"
#include "filmetric/fieldgen.hpp"
#include "filmetric/metrics.hpp"
#include "filmetric/optics.hpp"
#include "filmetric/reconstruct.hpp"
#include "filmetric/rng.hpp"
#include "filmetric/synth.hpp"

using namespace filmetric;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void run(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = s < budget_s;
  const bool ok = o.pass && in_time;
  failures += !ok;
  const std::string limit = std::isinf(budget_s) ? "no limit" : fmt("limit %gs", budget_s);
  std::printf("%s  %-26s %8.2fs (%s)  %s%s\n", ok ? "PASS" : "FAIL", name.c_str(), s, limit.c_str(),
              o.detail.c_str(), in_time ? "" : " [over time]");
  std::fflush(stdout);
}

double rmse(const ThicknessField& a, const ThicknessField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

const Colormap& default_colormap() {
  static const Colormap cm = build_colormap(FilmStack{}, SpectralSetup::defaults());
  return cm;
}

Outcome optics_identities() {
  const FilmStack stack;
  const double fresnel = std::pow((1.0 - 1.42) / (1.0 + 1.42), 2);
  double worst0 = 0.0;
  for (double lambda : {400.0, 550.0, 700.0}) worst0 = std::max(worst0, std::abs(reflectance(stack, lambda, 0.0) - fresnel));
  double worst = 0.0;
  for (double lambda : {450.0, 550.0, 650.0}) {
    const double period = lambda / (2.0 * 1.337);
    for (double h : {0.0, 123.4, 800.0, 1999.9, 3500.0})
      worst = std::max(worst, std::abs(reflectance(stack, lambda, h + period) - reflectance(stack, lambda, h)));
  }
  return {worst0 <= 1e-12 && worst <= 1e-10,
          fmt("R0=%.9f |R0-fresnel|=%.1e  max periodicity error=%.1e", reflectance(stack, 550.0, 0.0), worst0, worst)};
}

Outcome colormap_ambiguity() {
  const auto& cm = default_colormap();
  const std::size_t n = cm.size();
  const double step = cm.grid().step_nm;
  const auto gap = static_cast<std::size_t>(std::floor(100.0 / step)) + 1;
  std::size_t pairs = 0;
  double h1 = -1, h2 = -1, best = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + gap; j < n; ++j) {
      const auto &a = cm.sample(i), &b = cm.sample(j);
      const double d = std::max({std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])});
      if (d < 0.01) {
        ++pairs;
        if (d < best) best = d, h1 = cm.grid().at(i), h2 = cm.grid().at(j);
      }
    }
  return {pairs > 0, fmt("%zu pairs >100 nm apart within 0.01/channel; closest h1=%.0f h2=%.0f max diff=%.4f", pairs,
                         h1, h2, best)};
}

std::map<std::string, std::string> tree_digest(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = sha256_file(e.path());
  return out;
}

Outcome dataset_distribution() {
  const fs::path base = fs::temp_directory_path() / ("filmetric_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  DatasetSpec spec;
  spec.total_count = 5000;
  spec.field_size = 64;
  spec.augment.crop_size = 32;
  spec.master_seed = 90210;
  const auto m1 = generate(spec, base / "t1", 1);
  const auto d1 = tree_digest(base / "t1");
  fs::remove_all(base / "t1");
  generate(spec, base / "t8", 8);
  const auto d8 = tree_digest(base / "t8");
  fs::remove_all(base);

  std::size_t bad = 0;
  double lo = 1e9, hi = -1e9, smin = 1e9, smax = -1e9;
  for (const auto& it : m1.items) {
    const double span = it.field_max - it.field_min;
    lo = std::min(lo, it.field_min), hi = std::max(hi, it.field_max);
    smin = std::min(smin, span), smax = std::max(smax, span);
    bad += !(it.field_min >= 0.0 && it.field_max <= 4000.0 && span >= 250.0 - 1e-9 && span <= 2500.0 + 1e-9);
    for (const auto& s : it.subitems) bad += !(s.field_min >= 0.0 && s.field_max <= 4000.0);
  }
  const bool same = d1 == d8;
  return {m1.items.size() == 5000 && bad == 0 && same,
          fmt("%zu items (%zu/%zu/%zu), min %.1f max %.1f span [%.1f, %.1f], %zu violations, %zu files %s",
              m1.items.size(), m1.counts[0], m1.counts[1], m1.counts[2], lo, hi, smin, smax, bad, d1.size(),
              same ? "identical 1 vs 8 threads" : "DIFFER 1 vs 8 threads")};
}

Outcome round_trip() {
  const auto& cm = default_colormap();
  const FieldSampling sampling;
  const ReconstructConfig cfg;
  int clean_ok = 0, noisy_ok = 0, beats = 0;
  double worst_clean = 0.0;
  for (int s = 0; s < 100; ++s) {
    Rng rng(derive_seed(42, static_cast<std::uint64_t>(s)));
    const auto unit = gen_perlin(sampling.sample_perlin(rng), 128, 128);
    const auto gt = apply_range(unit, RangeConstraint{}, rng());
    const auto img = render(gt, cm);
    const double rc = rmse(reconstruct_regularized(img, cm, cfg).field, gt);
    clean_ok += rc < 30.0;
    worst_clean = std::max(worst_clean, rc);
    Rng noise(rng());
    const auto noisy = add_gaussian_noise(img, 10.0, noise);
    const double rn = rmse(reconstruct_regularized(noisy, cm, cfg).field, gt);
    noisy_ok += rn < 150.0;
    beats += rn < rmse(reconstruct_naive(noisy, cm), gt);
  }
  return {clean_ok >= 95 && noisy_ok >= 80 && beats >= 90,
          fmt("clean <30 nm: %d/100 (need 95, worst %.1f)  noisy <150 nm: %d/100 (need 80)  beats naive: %d/100 (need 90)",
              clean_ok, worst_clean, noisy_ok, beats)};
}

Outcome metrics_oracle() {
  std::mt19937_64 gen(2718);
  std::uniform_real_distribution<double> u(0.0, 4500.0), noise(-500.0, 500.0), coin(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int w = 16 + t % 17, h = 16 + t % 7;
    std::vector<double> p(w * h), g(w * h);
    std::vector<std::uint8_t> m(w * h);
    for (int i = 0; i < w * h; ++i) {
      g[i] = coin(gen) < 0.05 ? 0.0 : u(gen);
      p[i] = coin(gen) < 0.05 ? 8000.0 : g[i] + noise(gen);
      m[i] = coin(gen) < 0.85;
    }
    m[0] = 1, g[0] = 1000.0;
    const double lambda = 0.85;
    // Plain accumulation.
    double se = 0, ae = 0, rel = 0, sqrel = 0, l10 = 0, d1 = 0, d2 = 0;
    std::size_t n = 0, k = 0;
    for (int i = 0; i < w * h; ++i) {
      if (!m[i]) continue;
      const double pc = std::clamp(p[i], 0.0, 5000.0), e = pc - g[i];
      se += e * e, ae += std::abs(e), ++n;
      if (g[i] > 0) {
        const double pl = std::max(pc, 1.0), d = std::log(pl) - std::log(g[i]);
        rel += std::abs(e) / g[i], sqrel += e * e / g[i], l10 += std::abs(std::log10(pl) - std::log10(g[i]));
        d1 += d, d2 += d * d, ++k;
      }
    }
    const ValidityMask mask(w, h, m);
    const auto r = evaluate(ThicknessField(w, h, p), ThicknessField(w, h, g), &mask);
    const double want[] = {d2 / k - lambda * (d1 / k) * (d1 / k), rel / k, l10 / k, std::sqrt(se / n), sqrel / k,
                           std::sqrt(d2 / k), ae / n, se / n, std::sqrt(se / n)};
    const double got[] = {r.silog, r.abs_rel, r.log10, r.rms, r.sq_rel, r.log_rms, r.mae, r.mse, r.rmse};
    for (int q = 0; q < 9; ++q) worst = std::max(worst, std::abs(got[q] - want[q]) / std::max(std::abs(want[q]), 1e-300));
  }
  std::vector<double> g(256), p(256);
  for (int i = 0; i < 256; ++i) g[i] = 100.0 + 13.0 * i, p[i] = 1.1 * g[i];
  const auto r = evaluate(ThicknessField(16, 16, p), ThicknessField(16, 16, g));
  const double l = std::log(1.1);
  const double e_abs = std::abs(r.abs_rel - 0.1), e_silog = std::abs(r.silog - 0.15 * l * l);
  return {worst <= 1e-9 && e_abs <= 1e-12 && e_silog <= 1e-12,
          fmt("50 triples worst rel err %.1e; abs_rel err %.1e, silog err %.1e", worst, e_abs, e_silog)};
}

Outcome clamp_protocol() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(100.0, 4000.0);
  std::vector<double> g(32 * 32), p(32 * 32);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = u(gen), p[i] = g[i] + 0.1 * (u(gen) - 2000.0);
  auto spiked = p, preclamped = p;
  spiked[10] = 25000.0, preclamped[10] = 5000.0;
  spiked[500] = -300.0, preclamped[500] = 0.0;
  spiked[900] = 5000.5, preclamped[900] = 5000.0;
  const ThicknessField gt(32, 32, g);
  const auto a = evaluate(ThicknessField(32, 32, spiked), gt);
  const auto b = evaluate(ThicknessField(32, 32, preclamped), gt);
  const bool same = a.to_json() == b.to_json() && a.silog == b.silog && a.rmse == b.rmse && a.mae == b.mae &&
                    a.abs_rel == b.abs_rel && a.sq_rel == b.sq_rel && a.log10 == b.log10 && a.log_rms == b.log_rms;
  return {same, fmt("spiked rmse %.6f vs pre-clamped %.6f; all metrics %s", a.rmse, b.rmse,
                    same ? "identical" : "DIFFER")};
}

Outcome mean_series() {
  const auto& cm = default_colormap();
  PerlinParams pp;
  pp.octaves = 3;
  pp.scale_px = 100.0;
  pp.seed = 606;
  const auto base = apply_range(gen_perlin(pp, 96, 96), RangeConstraint{0.0, 4000.0, 500.0, 500.0}, 1);
  std::vector<Interferogram> frames;
  std::vector<double> truth;
  for (int k = 0; k < 10; ++k) {
    // A thinning then recovering film, as between blinks.
    const double target = 1500.0 - 90.0 * k + 6.0 * k * k;
    ThicknessField f = base;
    const double shift = target - base.mean();
    for (auto& v : f.values()) v += shift;
    truth.push_back(f.mean());
    frames.push_back(render(f, cm));
  }
  const auto s = mean_thickness_series(frames, cm, ReconstructConfig{});
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) worst = std::max(worst, std::abs(s[k].second - truth[k]));
  return {worst <= 30.0, fmt("10 frames, means %.0f..%.0f nm, worst error %.2f nm", *std::min_element(truth.begin(), truth.end()),
                             *std::max_element(truth.begin(), truth.end()), worst)};
}

}  // namespace

int main() {
  constexpr double kNoLimit = std::numeric_limits<double>::infinity();
  run("optics identities", 1.0, optics_identities);
  run("colormap ambiguity", 10.0, colormap_ambiguity);
  run("dataset distribution", 300.0, dataset_distribution);
  run("round-trip reconstruction", 600.0, round_trip);
  run("metrics oracle", 10.0, metrics_oracle);
  run("clamp protocol", kNoLimit, clamp_protocol);
  run("mean-thickness series", kNoLimit, mean_series);
  std::printf("%d criterion(s) failed\n", failures);
  return failures ? 1 : 0;
}
