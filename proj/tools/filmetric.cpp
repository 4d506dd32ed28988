// filmetric command-line tool.
// Exit codes: 0 ok, 2 configuration/usage, 3 I/O, 4 numerical.

#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "filmetric/checksum.hpp"
#include "filmetric/config_json.hpp"
#include "filmetric/dataset.hpp"
#include "filmetric/error.hpp"
#include "filmetric/metrics.hpp"
#include "filmetric/optics.hpp"
#include "filmetric/parallel.hpp"
#include "filmetric/plot.hpp"
#include "filmetric/png_io.hpp"
#include "filmetric/reconstruct.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace filmetric;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

std::string strip_suffix(std::string s, const std::string& suffix) {
  if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
    s.resize(s.size() - suffix.size());
  return s;
}

// Pairing key: file stem without a trailing _img, _gt or _pred.
std::string id_of(const fs::path& p) {
  std::string s = p.stem().string();
  for (const char* suf : {"_img", "_gt", "_pred"}) {
    const std::string t = strip_suffix(s, suf);
    if (t != s) return t;
  }
  return s;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<fs::path> list_pngs(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && ends_with(name, suffix)) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Colormap load_colormap(const std::string& path, int threads) {
  if (path.empty()) return build_colormap(FilmStack{}, SpectralSetup::defaults(), ThicknessGrid{}, threads);
  return Colormap::load(path);
}

Json field_sidecar(const ThicknessField& f) {
  const auto v = f.values();
  Json j;
  j["field_min"] = f.min();
  j["field_max"] = f.max();
  j["field_min_index"] = std::min_element(v.begin(), v.end()) - v.begin();
  j["field_max_index"] = std::max_element(v.begin(), v.end()) - v.begin();
  return j;
}

// Ground truth (and mask) for `id` from a directory in the pair format.
struct GroundTruth {
  ThicknessField field;
  std::optional<ValidityMask> mask;
};

std::optional<Json> sidecar_for(const fs::path& dir, const std::string& id) {
  for (const char* name : {"_meta.json", "_pred.json"}) {
    const fs::path p = dir / (id + name);
    if (fs::exists(p)) return read_json_file(p);
  }
  return std::nullopt;
}

GroundTruth read_gt(const fs::path& dir, const std::string& id) {
  const fs::path p = dir / (id + "_gt.png");
  if (!fs::exists(p)) throw IoError("no ground truth " + p.string() + " for item " + id);
  GroundTruth g;
  g.field = read_field_png(p);
  if (auto meta = sidecar_for(dir, id)) {
    g.field = restore_field(g.field, *meta);
    if (meta->contains("mask_rle"))
      g.mask = ValidityMask::from_run_lengths(g.field.width(), g.field.height(),
                                              meta->at("mask_rle").get<std::vector<std::uint32_t>>());
  }
  return g;
}

// Per-item metrics; nullopt when the item has no valid pixel with positive
// ground truth (a crop fully under the pupil mask, say).
std::optional<MetricsReport> evaluate_item(const ThicknessField& pred, const ThicknessField& gt,
                                           const ValidityMask* mask, const EvalOptions& opts) {
  for (std::size_t p = 0; p < gt.size(); ++p)
    if ((!mask || mask->valid(p)) && gt[p] > 0.0) return evaluate(pred, gt, mask, opts);
  for (std::size_t p = 0; p < gt.size(); ++p)
    if ((!mask || mask->valid(p)) && !(gt[p] >= 0.0)) return evaluate(pred, gt, mask, opts);  // raises
  return std::nullopt;
}

ThicknessField read_pred(const fs::path& file) {
  ThicknessField f = read_field_png(file);
  const fs::path side = file.parent_path() / (file.stem().string() + ".json");
  if (fs::exists(side)) f = restore_field(f, read_json_file(side));
  return f;
}

// ----------------------------------------------------------------- colormap

struct ColormapOpts {
  std::string stack, illuminant, filter, sens_r, sens_g, sens_b, out;
  double mono = 0.0;
  double grid_min = 0.0, grid_step = 1.0;
  std::size_t grid_count = 5001;
  int strip_height = 48;
};

int cmd_colormap(const ColormapOpts& o, int threads) {
  FilmStack stack;
  if (!o.stack.empty()) stack = film_stack_from_json(read_json_file(o.stack));
  SpectralSetup setup = o.mono > 0.0 ? SpectralSetup::monochromatic(o.mono) : SpectralSetup::defaults();
  if (!o.illuminant.empty()) setup.illuminant = SpectralCurve::load(o.illuminant);
  if (!o.filter.empty()) setup.filter = SpectralCurve::load(o.filter);
  if (!o.sens_r.empty()) setup.sensitivities[0] = SpectralCurve::load(o.sens_r);
  if (!o.sens_g.empty()) setup.sensitivities[1] = SpectralCurve::load(o.sens_g);
  if (!o.sens_b.empty()) setup.sensitivities[2] = SpectralCurve::load(o.sens_b);
  ThicknessGrid grid{o.grid_min, o.grid_step, o.grid_count};
  grid.validate();

  const Colormap cm = build_colormap(stack, setup, grid, threads);
  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  cm.save(out);
  const fs::path stem = out.parent_path() / out.stem();
  cm.save_csv(fs::path(stem.string() + ".csv"));
  write_interferogram(fs::path(stem.string() + "_preview.png"), colormap_strip(cm, o.strip_height));
  std::cout << "colormap: " << cm.size() << " rows, " << grid.min_nm << ".." << grid.max_nm()
            << " nm, " << cm.normalization_note() << "\n";
  return 0;
}

// -------------------------------------------------------------------- synth

int cmd_synth(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed,
              std::optional<std::size_t> total, int threads) {
  Json j = spec_path.empty() ? Json::object() : read_json_file(spec_path);
  if (seed) j["master_seed"] = *seed;
  if (total) j["total_count"] = *total;
  const DatasetSpec spec = DatasetSpec::from_json(j);

  const auto t0 = std::chrono::steady_clock::now();
  const Manifest m = generate(spec, out, threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path stats = fs::path(out) / "stats";
  fs::create_directories(stats);
  std::vector<double> means, spans;
  std::ostringstream csv;
  csv << "id,family,field_min,field_max,field_mean,span,subitems\n";
  for (const auto& it : m.items) {
    means.push_back(it.field_mean);
    spans.push_back(it.field_max - it.field_min);
    csv << it.id << "," << to_string(it.family) << "," << fmt(it.field_min) << ","
        << fmt(it.field_max) << "," << fmt(it.field_mean) << "," << fmt(it.field_max - it.field_min)
        << "," << it.subitems.size() << "\n";
  }
  write_text_atomic(stats / "items.csv", csv.str());
  write_histogram(stats / "mean_thickness_hist", histogram(means, 0.0, 4000.0, 40),
                  "Mean thickness per profile", "mean thickness (nm)");
  write_histogram(stats / "span_hist", histogram(spans, 0.0, 4000.0, 40),
                  "Thickness span per profile", "max - min (nm)");

  const auto [mn, mx] = std::minmax_element(means.begin(), means.end());
  const auto [sn, sx] = std::minmax_element(spans.begin(), spans.end());
  std::cout << "dataset: " << m.items.size() << " items (perlin " << m.counts[0] << ", gaussian "
            << m.counts[1] << ", experimental " << m.counts[2] << ")\n"
            << "mean thickness: " << *mn << " .. " << *mx << " nm\n"
            << "span: " << *sn << " .. " << *sx << " nm\n";
  std::cerr << "generated in " << secs << " s with " << threads << " thread(s)\n";
  return 0;
}

// -------------------------------------------------------------- reconstruct

struct ReconstructOpts {
  std::string input, colormap, config, out, method = "regularized", compare;
  EvalOptions eval;
};

struct Frame {
  std::string id;
  fs::path file;
  Interferogram image;
  std::optional<ValidityMask> mask;
};

Frame read_frame(const fs::path& file) {
  Frame f;
  f.file = file;
  f.id = id_of(file);
  f.image = read_interferogram(file);
  if (auto meta = sidecar_for(file.parent_path(), f.id); meta && meta->contains("mask_rle"))
    f.mask = ValidityMask::from_run_lengths(f.image.width(), f.image.height(),
                                            meta->at("mask_rle").get<std::vector<std::uint32_t>>());
  return f;
}

void write_prediction(const fs::path& dir, const std::string& id, const ThicknessField& field,
                      Json summary) {
  fs::create_directories(dir);
  write_field_png(dir / (id + "_pred.png"), field);
  const Json side = field_sidecar(field);
  for (auto it = side.begin(); it != side.end(); ++it) summary[it.key()] = it.value();
  write_text_atomic(dir / (id + "_pred.json"), summary.dump(2) + "\n");
}

int cmd_reconstruct(const ReconstructOpts& o, int threads) {
  ReconstructConfig cfg;
  if (!o.config.empty()) cfg = reconstruct_from_json(read_json_file(o.config));
  cfg.threads = threads;
  if (o.method != "naive" && o.method != "regularized" && o.method != "both")
    throw ConfigError("--method must be naive, regularized or both");
  const bool run_naive = o.method != "regularized", run_reg = o.method != "naive";

  std::vector<Frame> frames;
  const fs::path in(o.input);
  if (fs::is_directory(in)) {
    for (const auto& p : list_pngs(in, ".png")) {
      const std::string name = p.filename().string();
      if (ends_with(name, "_gt.png") || ends_with(name, "_pred.png")) continue;
      frames.push_back(read_frame(p));
    }
    if (frames.empty()) throw IoError("no input images in " + in.string());
  } else {
    if (!fs::exists(in)) throw IoError("no such input " + in.string());
    frames.push_back(read_frame(in));
  }
  const Colormap cm = load_colormap(o.colormap, threads);
  const fs::path out(o.out);
  fs::create_directories(out);
  const fs::path reg_dir = o.method == "both" ? out / "regularized" : out;
  const fs::path naive_dir = o.method == "both" ? out / "naive" : out;

  std::ostringstream timing;
  timing << "id,method,elapsed_ms\n";
  // (directory, predictions) per method run; the last one feeds the series.
  std::vector<std::pair<fs::path, std::vector<ThicknessField>>> outputs;

  if (run_naive) {
    std::vector<ThicknessField> preds;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      ThicknessField f = reconstruct_naive(frames[i].image, cm, threads);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      timing << frames[i].id << ",naive," << fmt(ms) << "\n";
      Json s{{"id", frames[i].id}, {"method", "naive"}, {"mean_nm", f.mean()}};
      write_prediction(naive_dir, frames[i].id, f, s);
      preds.push_back(std::move(f));
    }
    outputs.emplace_back(naive_dir, std::move(preds));
  }

  std::vector<std::pair<int, double>> series;
  if (run_reg) {
    std::vector<Interferogram> images;
    std::vector<ValidityMask> masks;
    const bool any_mask = std::any_of(frames.begin(), frames.end(), [](const Frame& f) { return f.mask.has_value(); });
    for (const auto& f : frames) {
      images.push_back(f.image);
      if (any_mask) masks.push_back(f.mask ? *f.mask : ValidityMask(f.image.width(), f.image.height(), true));
    }
    std::vector<ReconstructResult> results;
    series = mean_thickness_series(images, cm, cfg, &results, masks);
    std::vector<ThicknessField> preds;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto& r = results[i];
      timing << frames[i].id << ",regularized," << fmt(r.elapsed_ms) << "\n";
      Json s{{"id", frames[i].id},       {"method", "regularized"},
             {"energy", r.energy},       {"iterations", r.iterations},
             {"converged", r.converged}, {"mean_nm", r.mean_nm},
             {"config", to_json(cfg)}};
      write_prediction(reg_dir, frames[i].id, r.field, s);
      preds.push_back(r.field);
    }
    outputs.emplace_back(reg_dir, std::move(preds));
  } else {
    const auto& preds = outputs.back().second;
    for (std::size_t i = 0; i < frames.size(); ++i) series.emplace_back(static_cast<int>(i), preds[i].mean());
  }
  write_text_atomic(out / "timing.csv", timing.str());

  std::vector<double> gt_means;
  if (!o.compare.empty()) {
    std::vector<GroundTruth> gts;
    for (const auto& fr : frames) gts.push_back(read_gt(o.compare, fr.id));
    auto mask_of = [&](std::size_t i) -> const ValidityMask* {
      return gts[i].mask ? &*gts[i].mask : (frames[i].mask ? &*frames[i].mask : nullptr);
    };
    for (const auto& [dir, preds] : outputs) {
      MetricsAccumulator pooled(o.eval);
      for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto rep = evaluate_item(preds[i], gts[i].field, mask_of(i), o.eval);
        write_text_atomic(dir / (frames[i].id + "_metrics.json"), (rep ? rep->to_json() : "null") + std::string("\n"));
        pooled.add(preds[i], gts[i].field, mask_of(i));
      }
      const MetricsReport agg = pooled.report();
      write_text_atomic(dir / "compare_metrics.json", agg.to_json() + "\n");
      std::cout << "compare " << dir.string() << ": rmse " << agg.rmse << " nm, mae " << agg.mae << " nm over "
                << agg.n_valid << " pixels\n";
    }
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const ValidityMask* mask = mask_of(i);
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t p = 0; p < gts[i].field.size(); ++p)
        if (!mask || mask->valid(p)) {
          sum += gts[i].field[p];
          ++n;
        }
      gt_means.push_back(n ? sum / static_cast<double>(n) : 0.0);
    }
  }

  if (frames.size() > 1) {
    std::ostringstream csv;
    csv << "frame,id,mean_nm" << (gt_means.empty() ? "" : ",gt_mean_nm") << "\n";
    Series pred{"predicted", {}, {}}, truth{"ground truth", {}, {}};
    for (std::size_t i = 0; i < series.size(); ++i) {
      csv << series[i].first << "," << frames[i].id << "," << fmt(series[i].second);
      if (!gt_means.empty()) csv << "," << fmt(gt_means[i]);
      csv << "\n";
      pred.x.push_back(series[i].first);
      pred.y.push_back(series[i].second);
      if (!gt_means.empty()) {
        truth.x.push_back(series[i].first);
        truth.y.push_back(gt_means[i]);
      }
    }
    write_text_atomic(out / "series.csv", csv.str());
    std::vector<Series> plot{pred};
    if (!gt_means.empty()) plot.push_back(truth);
    write_line_plot(out / "mean_thickness", plot, "Mean film thickness", "frame", "mean thickness (nm)");
  }
  for (std::size_t i = 0; i < frames.size(); ++i)
    std::cout << frames[i].id << ": mean " << series[i].second << " nm\n";
  return 0;
}

// ----------------------------------------------------------------- evaluate

struct EvalRun {
  fs::path pred_dir;
  MetricsReport aggregate;
};

EvalRun evaluate_dir(const fs::path& pred_dir, const fs::path& gt_dir, const EvalOptions& opts,
                     const fs::path& per_item_csv) {
  const auto preds = list_pngs(pred_dir, "_pred.png");
  if (preds.empty()) throw IoError("no *_pred.png files in " + pred_dir.string());
  std::map<std::string, fs::path> by_id;
  for (const auto& p : preds) by_id[id_of(p)] = p;
  for (const auto& g : list_pngs(gt_dir, "_gt.png"))
    if (!by_id.count(id_of(g))) throw IoError("unpaired ground truth " + g.filename().string() + " (no prediction in " + pred_dir.string() + ")");

  MetricsAccumulator pooled(opts);
  std::ostringstream csv;
  csv << "id," << MetricsReport::csv_header() << "\n";
  for (const auto& [id, file] : by_id) {
    const GroundTruth g = read_gt(gt_dir, id);
    const ThicknessField pred = read_pred(file);
    const ValidityMask* mask = g.mask ? &*g.mask : nullptr;
    const auto rep = evaluate_item(pred, g.field, mask, opts);
    csv << id << "," << (rep ? rep->csv_row() : std::string(10, ',')) << "\n";
    pooled.add(pred, g.field, mask);
  }
  write_text_atomic(per_item_csv, csv.str());
  return {pred_dir, pooled.report()};
}

int cmd_evaluate(const std::vector<std::string>& pred_dirs, const std::string& gt_dir,
                 const std::string& out, const EvalOptions& opts, bool presentation) {
  fs::create_directories(out);
  std::vector<EvalRun> runs;
  Json summary;
  summary["eval"] = to_json(opts);
  summary["runs"] = Json::array();
  for (std::size_t k = 0; k < pred_dirs.size(); ++k) {
    const std::string tag = "run" + std::to_string(k);
    EvalRun r = evaluate_dir(pred_dirs[k], gt_dir, opts, fs::path(out) / (tag + "_per_item.csv"));
    write_text_atomic(fs::path(out) / (tag + "_aggregate.json"), r.aggregate.to_json() + "\n");
    Json jr = parse_json_text(r.aggregate.to_json(), "report");
    if (presentation) jr["silog_x100_sqrt"] = silog_presentation(r.aggregate.silog);
    summary["runs"].push_back({{"pred_dir", pred_dirs[k]}, {"aggregate", jr}});
    runs.push_back(std::move(r));
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < runs.size(); ++k)
    if (runs[k].aggregate.rmse < runs[best].aggregate.rmse) best = k;
  summary["best"] = {{"index", best}, {"pred_dir", pred_dirs[best]}, {"rmse", runs[best].aggregate.rmse}};
  write_text_atomic(fs::path(out) / "summary.json", summary.dump(2) + "\n");
  for (std::size_t k = 0; k < runs.size(); ++k)
    std::cout << (k == best ? "* " : "  ") << pred_dirs[k] << ": rmse " << runs[k].aggregate.rmse
              << " nm, abs_rel " << runs[k].aggregate.abs_rel << ", silog " << runs[k].aggregate.silog
              << "\n";
  if (runs.size() > 1) std::cout << "best by rmse: " << pred_dirs[best] << "\n";
  return 0;
}

// -------------------------------------------------------------------- sweep

// Runs argv without a shell; returns the exit status (-1 if not exited).
int run_process(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  pid_t pid = 0;
  if (posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ) != 0)
    throw IoError("cannot start " + args[0]);
  int status = 0;
  if (waitpid(pid, &status, 0) < 0) throw IoError("waitpid failed for " + args[0]);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

MetricsReport score_predictions(const fs::path& pred_dir, const Dataset& test, const EvalOptions& opts) {
  MetricsAccumulator acc(opts);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const DatasetEntry e = test.get(i);
    const fs::path p = pred_dir / (e.id + "_pred.png");
    if (!fs::exists(p)) throw IoError("trainer output lacks " + p.string());
    acc.add(read_pred(p), e.field, &e.mask);
  }
  return acc.report();
}

int cmd_sweep(const std::string& grid_path, const std::string& out_s, const std::string& trainer_cmd,
              int threads) {
  const Json grid = read_json_file(grid_path);
  JsonReader r(grid, "sweep");
  std::vector<std::size_t> sizes{100};
  std::vector<std::array<double, 3>> mixes{{0.5, 0.5, 0.0}};
  Json base = Json::object(), test_j = Json::object(), recon_j = Json::object(), trainer_cfg = Json::object();
  std::string trainer = trainer_cmd;
  r.get("sizes", sizes);
  r.get("mixes", mixes);
  r.get("base_spec", base);
  r.get("test_spec", test_j);
  r.get("reconstruct", recon_j);
  r.get("trainer_config", trainer_cfg);
  if (trainer.empty()) r.get("trainer", trainer);
  r.finish();
  if (sizes.empty() || mixes.empty()) throw ConfigError("sweep needs at least one size and one mix");
  const ReconstructConfig rcfg = reconstruct_from_json(recon_j);
  const EvalOptions eval;

  const fs::path out(out_s);
  fs::create_directories(out);
  // Held-out test set, shared by every cell.
  Json tj = test_j;
  if (!tj.contains("total_count")) tj["total_count"] = 10;
  if (!tj.contains("master_seed")) tj["master_seed"] = 777;
  if (!tj.contains("augment")) tj["augment"] = {{"gaussian_noise", true}, {"p_gaussian_noise", 1.0}};
  if (!tj.contains("field_size")) tj["field_size"] = 64;
  const DatasetSpec test_spec = DatasetSpec::from_json(tj);
  generate(test_spec, out / "test", threads);
  const Dataset test = Dataset::open(out / "test");
  const Colormap cm = Colormap::load(out / "test" / "colormap.txt");

  std::ostringstream csv;
  csv << "dataset_size,frac_perlin,frac_gaussian,frac_experimental,method,status,rmse,mae,abs_rel,silog,n_valid\n";
  auto row = [&](const std::string& size, const std::string& mix, const std::string& method,
                 const std::string& status, const MetricsReport* m) {
    csv << size << "," << mix << "," << method << "," << status << ",";
    if (m)
      csv << fmt(m->rmse) << "," << fmt(m->mae) << "," << fmt(m->abs_rel) << "," << fmt(m->silog) << ","
          << m->n_valid << "\n";
    else
      csv << ",,,,\n";
  };

  {
    MetricsAccumulator naive(eval), reg(eval);
    for (std::size_t i = 0; i < test.size(); ++i) {
      const DatasetEntry e = test.get(i);
      naive.add(reconstruct_naive(e.image, cm, threads), e.field, &e.mask);
      reg.add(reconstruct_regularized(e.image, cm, rcfg, &e.mask).field, e.field, &e.mask);
    }
    const MetricsReport a = naive.report(), b = reg.report();
    row("-", "-,-,-", "classical_naive", "ok", &a);
    row("-", "-,-,-", "classical_regularized", "ok", &b);
  }

  const std::vector<std::string> trainer_argv = split_words(trainer);
  for (std::size_t si = 0; si < sizes.size(); ++si)
    for (std::size_t mi = 0; mi < mixes.size(); ++mi) {
      const std::string size = std::to_string(sizes[si]);
      const std::string mix = fmt(mixes[mi][0]) + "," + fmt(mixes[mi][1]) + "," + fmt(mixes[mi][2]);
      if (trainer_argv.empty()) {
        row(size, mix, "trainer", "no_trainer", nullptr);
        continue;
      }
      const std::string cell = "cell_" + std::to_string(si) + "_" + std::to_string(mi);
      Json sj = base;
      sj["total_count"] = sizes[si];
      sj["frac_perlin"] = mixes[mi][0];
      sj["frac_gaussian"] = mixes[mi][1];
      sj["frac_experimental"] = mixes[mi][2];
      const DatasetSpec spec = DatasetSpec::from_json(sj);
      generate(spec, out / cell / "dataset", threads);
      Json cfg = trainer_cfg;
      cfg["test_dataset"] = fs::absolute(out / "test").string();
      write_text_atomic(out / cell / "trainer_config.json", cfg.dump(2) + "\n");
      std::vector<std::string> args = trainer_argv;
      for (const std::string& a : {std::string("--dataset"), (out / cell / "dataset").string(),
                                   std::string("--config"), (out / cell / "trainer_config.json").string(),
                                   std::string("--out"), (out / cell / "trainer").string()})
        args.push_back(a);
      const int status = run_process(args);
      if (status != 0) {
        row(size, mix, "trainer", "exit_" + std::to_string(status), nullptr);
        continue;
      }
      const MetricsReport m = score_predictions(out / cell / "trainer" / "predictions", test, eval);
      row(size, mix, "trainer", "ok", &m);
    }
  write_text_atomic(out / "grid.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return kExitConfig;
    case ErrorKind::io: return kExitIo;
    case ErrorKind::numerical: return kExitNumerical;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"filmetric: thin-film interferogram synthesis, reconstruction and scoring"};
  app.set_version_flag("--version", std::string(FILMETRIC_VERSION));
  app.require_subcommand(1);
  int threads = default_thread_count();
  app.add_option("--threads", threads, "worker threads (default: FILMETRIC_THREADS or all cores)")
      ->check(CLI::Range(1, 1024));

  ColormapOpts co;
  auto* c_cm = app.add_subcommand("colormap", "build a thickness -> RGB colormap");
  c_cm->add_option("--out", co.out, "colormap file; also writes <stem>.csv and <stem>_preview.png")->required();
  c_cm->add_option("--stack", co.stack, "film stack JSON");
  c_cm->add_option("--illuminant", co.illuminant, "illuminant curve file");
  c_cm->add_option("--filter", co.filter, "filter transmission curve file");
  c_cm->add_option("--sens-r", co.sens_r, "red sensitivity curve file");
  c_cm->add_option("--sens-g", co.sens_g, "green sensitivity curve file");
  c_cm->add_option("--sens-b", co.sens_b, "blue sensitivity curve file");
  c_cm->add_option("--monochromatic", co.mono, "single-wavelength illuminant (nm)");
  c_cm->add_option("--grid-min", co.grid_min, "first thickness (nm)");
  c_cm->add_option("--grid-step", co.grid_step, "thickness step (nm)");
  c_cm->add_option("--grid-count", co.grid_count, "number of thickness samples");
  c_cm->add_option("--strip-height", co.strip_height, "preview strip height (px)");

  std::string synth_spec, synth_out;
  std::optional<std::uint64_t> synth_seed;
  std::optional<std::size_t> synth_total;
  auto* c_syn = app.add_subcommand("synth", "generate a synthetic dataset");
  c_syn->add_option("--spec", synth_spec, "dataset spec JSON (defaults when omitted)");
  c_syn->add_option("--out", synth_out, "output directory")->required();
  c_syn->add_option("--seed", synth_seed, "override master_seed");
  c_syn->add_option("--total", synth_total, "override total_count");

  ReconstructOpts ro;
  auto* c_rec = app.add_subcommand("reconstruct", "reconstruct thickness from interferograms");
  c_rec->add_option("--input", ro.input, "PNG file, or a directory of frames (a sequence)")->required();
  c_rec->add_option("--out", ro.out, "output directory")->required();
  c_rec->add_option("--colormap", ro.colormap, "colormap file (default: built-in)");
  c_rec->add_option("--config", ro.config, "reconstruction config JSON");
  c_rec->add_option("--method", ro.method, "naive | regularized | both");
  c_rec->add_option("--compare", ro.compare, "ground-truth directory; writes metrics per frame");

  std::vector<std::string> pred_dirs;
  std::string gt_dir, eval_out;
  EvalOptions eo;
  bool presentation = false;
  auto* c_ev = app.add_subcommand("evaluate", "score predictions against ground truth");
  c_ev->add_option("--pred", pred_dirs, "prediction directory (repeatable)")->required();
  c_ev->add_option("--gt", gt_dir, "ground-truth directory")->required();
  c_ev->add_option("--out", eval_out, "report directory")->required();
  for (auto* sc : {c_ev, c_rec}) {
    EvalOptions& e = sc == c_ev ? eo : ro.eval;
    sc->add_option("--clamp-lo", e.clamp_lo_um, "evaluation range lower bound (um)");
    sc->add_option("--clamp-hi", e.clamp_hi_um, "evaluation range upper bound (um)");
    sc->add_option("--silog-lambda", e.silog_lambda, "scale-invariance weight");
  }
  c_ev->add_flag("--silog-presentation", presentation, "also report 100*sqrt(silog)");

  std::string grid_path, sweep_out, trainer_cmd;
  auto* c_sw = app.add_subcommand("sweep", "dataset size x mix grid over reconstructors");
  c_sw->add_option("--grid", grid_path, "sweep grid JSON")->required();
  c_sw->add_option("--out", sweep_out, "output directory")->required();
  c_sw->add_option("--trainer", trainer_cmd, "trainer command (overrides the grid file)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*c_cm) return cmd_colormap(co, threads);
    if (*c_syn) return cmd_synth(synth_spec, synth_out, synth_seed, synth_total, threads);
    if (*c_rec) return cmd_reconstruct(ro, threads);
    if (*c_ev) {
      eo.validate();
      return cmd_evaluate(pred_dirs, gt_dir, eval_out, eo, presentation);
    }
    if (*c_sw) return cmd_sweep(grid_path, sweep_out, trainer_cmd, threads);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
