#include "filmetric/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "filmetric/checksum.hpp"
#include "filmetric/parallel.hpp"
#include "filmetric/png_io.hpp"
#include "filmetric/rng.hpp"

namespace filmetric {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPoissonModel = "additive zero-mean: k - lambda per channel, k ~ Poisson(lambda)";

std::string item_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

std::size_t argmin_index(const ThicknessField& f) {
  const auto v = f.values();
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}
std::size_t argmax_index(const ThicknessField& f) {
  const auto v = f.values();
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

Colormap spec_colormap(const DatasetSpec& spec, int threads) {
  if (spec.colormap_ref.empty())
    return build_colormap(FilmStack{}, SpectralSetup::defaults(), ThicknessGrid{}, threads);
  return Colormap::load(spec.colormap_ref);
}

Json ops_json(const std::vector<AppliedOp>& ops) {
  Json arr = Json::array();
  for (const auto& op : ops) arr.push_back({{"name", op.name}, {"params", op.params}});
  return arr;
}

Json sample_meta(const GeneratedItem& item, const AugmentedSample& s, const std::string& id,
                 std::uint64_t augment_seed) {
  Json m;
  m["id"] = id;
  m["parent"] = item.record.id;
  m["family"] = to_string(item.record.family);
  m["index"] = item.record.index;
  m["item_seed"] = item.record.seed;
  m["params"] = item.params;
  m["augment_seed"] = augment_seed;
  m["ops"] = ops_json(s.ops);
  m["poisson_noise_model"] = kPoissonModel;
  m["width"] = s.field.width();
  m["height"] = s.field.height();
  m["field_min"] = s.field.min();
  m["field_max"] = s.field.max();
  m["field_min_index"] = argmin_index(s.field);
  m["field_max_index"] = argmax_index(s.field);
  m["mask_rle"] = s.mask.run_lengths();
  return m;
}

DatasetError missing(const std::string& item, const fs::path& p) {
  return DatasetError(DatasetError::Code::missing_file, item, "item " + item + ": missing file " + p.string());
}

Bytes read_verified(const fs::path& root, const std::string& rel, const std::string& sha,
                    const std::string& item) {
  const fs::path p = root / rel;
  if (!fs::exists(p)) throw missing(item, p);
  Bytes bytes = read_file(p);
  if (sha256_hex(bytes) != sha)
    throw DatasetError(DatasetError::Code::checksum_mismatch, item,
                       "item " + item + ": checksum mismatch for " + rel);
  return bytes;
}

Manifest read_manifest(const fs::path& dir) {
  const fs::path p = dir / "manifest.json";
  if (!fs::exists(p))
    throw DatasetError(DatasetError::Code::no_manifest, "", "no manifest.json in " + dir.string());
  try {
    return Manifest::from_json(read_json_file(p));
  } catch (const ConfigError& e) {
    throw DatasetError(DatasetError::Code::bad_manifest, "", std::string("bad manifest: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(DatasetError::Code::bad_manifest, "", std::string("bad manifest: ") + e.what());
  }
}

void prepare_output(const fs::path& out) {
  if (!fs::exists(out)) {
    fs::create_directories(out);
  } else {
    if (!fs::is_directory(out)) throw ConfigError(out.string() + " is not a directory");
    const std::vector<std::string> ours = {"manifest.json", "manifest.json.tmp", "items",
                                           "colormap.txt", "stats"};
    for (const auto& e : fs::directory_iterator(out)) {
      const std::string name = e.path().filename().string();
      if (std::find(ours.begin(), ours.end(), name) == ours.end())
        throw ConfigError("output directory " + out.string() +
                          " holds files that are not part of a dataset: " + name);
    }
    // The manifest goes first so an interrupted rewrite never looks complete.
    for (const auto& name : ours) fs::remove_all(out / name);
  }
  fs::create_directories(out / "items");
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::perlin: return "perlin";
    case Family::gaussian: return "gaussian";
    case Family::experimental: return "experimental";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "perlin") return Family::perlin;
  if (s == "gaussian") return Family::gaussian;
  if (s == "experimental") return Family::experimental;
  throw ConfigError("unknown family '" + s + "'");
}

void DatasetSpec::validate() const {
  if (total_count < 1) throw ConfigError("total_count must be >= 1");
  const double f[3] = {frac_perlin, frac_gaussian, frac_experimental};
  for (double v : f)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("fractions must be finite and >= 0");
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) throw ConfigError("fractions must sum to 1");
  if (enforce_fraction_policy) {
    if (f[0] < 0.25 || f[0] > 0.5 || f[1] < 0.25 || f[1] > 0.5 || f[2] > 0.5)
      throw ConfigError(
          "fractions outside policy: perlin and gaussian in [0.25, 0.5], experimental in [0, 0.5]"
          " (set enforce_fraction_policy=false to override)");
  }
  if (field_size < 16 || field_size > 4096) throw ConfigError("field_size must be in [16, 4096]");
  augment.validate();
  if (augment.five_crop && augment.crop_size > field_size)
    throw ConfigError("crop_size exceeds field_size");
  range.validate();
  sampling.validate();
}

Json DatasetSpec::to_json() const {
  Json j;
  j["total_count"] = total_count;
  j["frac_perlin"] = frac_perlin;
  j["frac_gaussian"] = frac_gaussian;
  j["frac_experimental"] = frac_experimental;
  j["enforce_fraction_policy"] = enforce_fraction_policy;
  j["master_seed"] = master_seed;
  j["field_size"] = field_size;
  j["augment"] = filmetric::to_json(augment);
  j["range"] = filmetric::to_json(range);
  j["sampling"] = filmetric::to_json(sampling);
  j["colormap_ref"] = colormap_ref;
  j["experimental_source"] = experimental_source;
  j["split"] = split;
  return j;
}

DatasetSpec DatasetSpec::from_json(const Json& j) {
  DatasetSpec s;
  JsonReader r(j, "dataset");
  r.get("total_count", s.total_count);
  r.get("frac_perlin", s.frac_perlin);
  r.get("frac_gaussian", s.frac_gaussian);
  r.get("frac_experimental", s.frac_experimental);
  r.get("enforce_fraction_policy", s.enforce_fraction_policy);
  r.get("master_seed", s.master_seed);
  r.get("field_size", s.field_size);
  if (const Json* a = r.child("augment")) s.augment = augment_from_json(*a);
  if (const Json* a = r.child("range")) s.range = range_from_json(*a);
  if (const Json* a = r.child("sampling")) s.sampling = sampling_from_json(*a);
  r.get("colormap_ref", s.colormap_ref);
  r.get("experimental_source", s.experimental_source);
  r.get("split", s.split);
  r.finish();
  s.validate();
  return s;
}

std::array<std::size_t, 3> family_counts(std::size_t total, const std::array<double, 3>& fr) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = fr[k] * static_cast<double>(total);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    rem[k] = exact - std::floor(exact);
    assigned += counts[k];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[order[i % 3]];
  while (assigned > total) {  // only reachable through rounding noise in the fractions
    for (int k = 2; k >= 0 && assigned > total; --k)
      if (counts[k] > 0) {
        --counts[k];
        --assigned;
      }
  }
  return counts;
}

Json Manifest::to_json() const {
  Json j;
  j["format"] = format;
  j["version"] = version;
  j["spec"] = spec.to_json();
  j["colormap_sha256"] = colormap_sha256;
  j["counts"] = {{"perlin", counts[0]}, {"gaussian", counts[1]}, {"experimental", counts[2]}};
  Json items = Json::array();
  for (const auto& it : this->items) {
    Json ji;
    ji["index"] = it.index;
    ji["id"] = it.id;
    ji["family"] = filmetric::to_string(it.family);
    ji["seed"] = it.seed;
    ji["field_min"] = it.field_min;
    ji["field_max"] = it.field_max;
    ji["field_mean"] = it.field_mean;
    if (!it.source.empty()) ji["source"] = it.source;
    Json subs = Json::array();
    for (const auto& s : it.subitems)
      subs.push_back({{"id", s.id},
                      {"img", s.img_file},
                      {"gt", s.gt_file},
                      {"meta", s.meta_file},
                      {"img_sha256", s.img_sha256},
                      {"gt_sha256", s.gt_sha256},
                      {"meta_sha256", s.meta_sha256},
                      {"field_min", s.field_min},
                      {"field_max", s.field_max},
                      {"n_valid", s.n_valid}});
    ji["subitems"] = std::move(subs);
    items.push_back(std::move(ji));
  }
  j["items"] = std::move(items);
  return j;
}

Manifest Manifest::from_json(const Json& j) {
  Manifest m;
  m.format = j.at("format").get<std::string>();
  if (m.format != "filmetric-dataset/1") throw ConfigError("unsupported dataset format " + m.format);
  m.version = j.at("version").get<std::string>();
  m.spec = DatasetSpec::from_json(j.at("spec"));
  m.colormap_sha256 = j.at("colormap_sha256").get<std::string>();
  const Json& c = j.at("counts");
  m.counts = {c.at("perlin").get<std::size_t>(), c.at("gaussian").get<std::size_t>(),
              c.at("experimental").get<std::size_t>()};
  for (const Json& ji : j.at("items")) {
    ItemRecord it;
    it.index = ji.at("index").get<std::size_t>();
    it.id = ji.at("id").get<std::string>();
    it.family = family_from_string(ji.at("family").get<std::string>());
    it.seed = ji.at("seed").get<std::uint64_t>();
    it.field_min = ji.at("field_min").get<double>();
    it.field_max = ji.at("field_max").get<double>();
    it.field_mean = ji.at("field_mean").get<double>();
    if (ji.contains("source")) it.source = ji.at("source").get<std::string>();
    for (const Json& js : ji.at("subitems")) {
      SubItemRecord s;
      s.id = js.at("id").get<std::string>();
      s.img_file = js.at("img").get<std::string>();
      s.gt_file = js.at("gt").get<std::string>();
      s.meta_file = js.at("meta").get<std::string>();
      s.img_sha256 = js.at("img_sha256").get<std::string>();
      s.gt_sha256 = js.at("gt_sha256").get<std::string>();
      s.meta_sha256 = js.at("meta_sha256").get<std::string>();
      s.field_min = js.at("field_min").get<double>();
      s.field_max = js.at("field_max").get<double>();
      s.n_valid = js.at("n_valid").get<std::size_t>();
      it.subitems.push_back(std::move(s));
    }
    m.items.push_back(std::move(it));
  }
  if (m.items.size() != m.spec.total_count)
    throw ConfigError("manifest lists " + std::to_string(m.items.size()) + " items, spec says " +
                      std::to_string(m.spec.total_count));
  return m;
}

std::vector<ExperimentalPair> scan_pairs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("experimental source " + dir.string() + " is not a directory");
  std::vector<ExperimentalPair> out;
  const std::string suffix = "_img.png";
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
      continue;
    const std::string base = name.substr(0, name.size() - suffix.size());
    ExperimentalPair p{base, e.path(), dir / (base + "_gt.png"), dir / (base + "_meta.json")};
    if (!fs::exists(p.gt)) throw IoError("unpaired image " + name + " (no " + base + "_gt.png)");
    if (!fs::exists(p.meta)) p.meta.clear();
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const ExperimentalPair& a, const ExperimentalPair& b) { return a.name < b.name; });
  return out;
}

ThicknessField restore_field(const ThicknessField& decoded, const Json& meta) {
  ThicknessField f = decoded;
  if (!meta.contains("field_min")) return f;
  const double lo = meta.at("field_min").get<double>();
  const double hi = meta.at("field_max").get<double>();
  for (auto& v : f.values()) v = std::clamp(v, lo, hi);
  if (meta.contains("field_min_index")) {
    const auto i = meta.at("field_min_index").get<std::size_t>();
    const auto k = meta.at("field_max_index").get<std::size_t>();
    if (i >= f.size() || k >= f.size()) throw ConfigError("sidecar extreme index out of range");
    f[i] = lo;
    f[k] = hi;
  }
  return f;
}

GeneratedItem synthesize_item(const DatasetSpec& spec, const Colormap& colormap, std::size_t index,
                              Family family, const std::vector<ExperimentalPair>& pool) {
  GeneratedItem item;
  item.record.index = index;
  item.record.id = item_id(index);
  item.record.family = family;
  item.record.seed = derive_seed(spec.master_seed, index);
  Rng rng(item.record.seed);

  ThicknessField field;
  Interferogram image;
  ValidityMask mask;
  const int n = spec.field_size;
  if (family == Family::experimental) {
    const auto counts =
        family_counts(spec.total_count, {spec.frac_perlin, spec.frac_gaussian, spec.frac_experimental});
    if (pool.empty()) throw ConfigError("missing experimental source");
    const std::size_t ordinal = index - counts[0] - counts[1];
    const ExperimentalPair& pair = pool[ordinal % pool.size()];
    image = read_interferogram(pair.img);
    Json meta = Json::object();
    if (!pair.meta.empty()) meta = read_json_file(pair.meta);
    field = restore_field(read_field_png(pair.gt), meta);
    if (image.width() != field.width() || image.height() != field.height())
      throw ConfigError("experimental pair " + pair.name + ": image and ground truth differ in size");
    field.validate();
    if (meta.contains("mask_rle"))
      mask = ValidityMask::from_run_lengths(field.width(), field.height(),
                                            meta.at("mask_rle").get<std::vector<std::uint32_t>>());
    else
      mask = ValidityMask(field.width(), field.height(), true);
    if (spec.augment.five_crop && spec.augment.crop_size > std::min(field.width(), field.height()))
      throw ConfigError("experimental pair " + pair.name + " is smaller than crop_size");
    item.record.source = pair.name;
    item.params = {{"source", pair.name}, {"cycle", ordinal / pool.size()}};
  } else {
    ThicknessField unit;
    if (family == Family::perlin) {
      const PerlinParams p = spec.sampling.sample_perlin(rng);
      unit = gen_perlin(p, n, n);
      item.params["perlin"] = to_json(p);
    } else {
      const GaussianParams p = spec.sampling.sample_gaussian(rng);
      unit = gen_gaussian(p, n, n);
      item.params["gaussian"] = to_json(p);
    }
    const RangeDraw draw = draw_range(spec.range, rng());
    field = apply_range(unit, draw, spec.range.abs_max_nm);
    item.params["range"] = {{"offset_nm", draw.offset_nm}, {"span_nm", draw.span_nm}};
    image = render(field, colormap);
    mask = ValidityMask(n, n, true);
  }
  item.record.field_min = field.min();
  item.record.field_max = field.max();
  item.record.field_mean = field.mean();

  AugmentConfig cfg = spec.augment;
  cfg.seed = rng();
  item.params["augment_seed"] = cfg.seed;
  item.samples = augment(image, field, mask, cfg);
  for (std::size_t k = 0; k < item.samples.size(); ++k) {
    SubItemRecord s;
    s.id = item.samples.size() == 1 ? item.record.id : item.record.id + "_c" + std::to_string(k);
    item.record.subitems.push_back(std::move(s));
  }
  return item;
}

Manifest generate(const DatasetSpec& spec, const fs::path& out_dir, int threads) {
  spec.validate();
  const auto counts =
      family_counts(spec.total_count, {spec.frac_perlin, spec.frac_gaussian, spec.frac_experimental});
  std::vector<ExperimentalPair> pool;
  if (counts[2] > 0) {
    if (spec.experimental_source.empty()) throw ConfigError("missing experimental source");
    if (!fs::exists(spec.experimental_source))
      throw ConfigError("missing experimental source " + spec.experimental_source);
    pool = scan_pairs(spec.experimental_source);
    if (pool.empty())
      throw ConfigError("experimental source " + spec.experimental_source + " has no pairs");
  }
  const Colormap colormap = spec_colormap(spec, threads);
  const std::string cm_text = colormap.serialize();

  prepare_output(out_dir);
  write_text_atomic(out_dir / "colormap.txt", cm_text);

  Manifest m;
  m.version = FILMETRIC_VERSION;
  m.spec = spec;
  m.colormap_sha256 = sha256_hex(cm_text);
  m.counts = counts;
  m.items.resize(spec.total_count);

  parallel_for(spec.total_count, threads, [&](std::size_t i) {
    const Family fam = i < counts[0]               ? Family::perlin
                       : i < counts[0] + counts[1] ? Family::gaussian
                                                   : Family::experimental;
    GeneratedItem item = synthesize_item(spec, colormap, i, fam, pool);
    const std::uint64_t augment_seed = item.params.at("augment_seed").get<std::uint64_t>();
    for (std::size_t k = 0; k < item.samples.size(); ++k) {
      const AugmentedSample& s = item.samples[k];
      SubItemRecord& rec = item.record.subitems[k];
      rec.img_file = "items/" + rec.id + "_img.png";
      rec.gt_file = "items/" + rec.id + "_gt.png";
      rec.meta_file = "items/" + rec.id + "_meta.json";
      const Bytes img = encode_png_rgb8(s.image);
      const Bytes gt = encode_field_png(s.field);
      const std::string meta = sample_meta(item, s, rec.id, augment_seed).dump(1) + "\n";
      write_file(out_dir / rec.img_file, img);
      write_file(out_dir / rec.gt_file, gt);
      write_text_atomic(out_dir / rec.meta_file, meta);
      rec.img_sha256 = sha256_hex(img);
      rec.gt_sha256 = sha256_hex(gt);
      rec.meta_sha256 = sha256_hex(meta);
      rec.field_min = s.field.min();
      rec.field_max = s.field.max();
      rec.n_valid = s.mask.count_valid();
    }
    m.items[i] = std::move(item.record);
  });

  write_text_atomic(out_dir / "manifest.json", m.to_json().dump(1) + "\n");
  return m;
}

GeneratedItem regenerate_item(const fs::path& dir, const std::string& item_id) {
  const Manifest m = read_manifest(dir);
  const std::string cm_text = read_text_file(dir / "colormap.txt");
  if (sha256_hex(cm_text) != m.colormap_sha256)
    throw DatasetError(DatasetError::Code::checksum_mismatch, "", "colormap.txt checksum mismatch");
  const Colormap colormap = Colormap::deserialize(cm_text);
  for (const auto& it : m.items) {
    if (it.id != item_id) continue;
    std::vector<ExperimentalPair> pool;
    if (it.family == Family::experimental) pool = scan_pairs(m.spec.experimental_source);
    return synthesize_item(m.spec, colormap, it.index, it.family, pool);
  }
  throw ConfigError("no item '" + item_id + "' in " + dir.string());
}

Dataset Dataset::open(const fs::path& dir) {
  Dataset d;
  d.dir_ = dir;
  d.manifest_ = read_manifest(dir);
  for (std::size_t i = 0; i < d.manifest_.items.size(); ++i)
    for (std::size_t k = 0; k < d.manifest_.items[i].subitems.size(); ++k) d.refs_.emplace_back(i, k);
  return d;
}

DatasetEntry Dataset::get(std::size_t i) const {
  const auto [ii, kk] = refs_.at(i);
  const ItemRecord& it = manifest_.items[ii];
  const SubItemRecord& s = it.subitems[kk];
  const Bytes img = read_verified(dir_, s.img_file, s.img_sha256, s.id);
  const Bytes gt = read_verified(dir_, s.gt_file, s.gt_sha256, s.id);
  const Bytes meta_bytes = read_verified(dir_, s.meta_file, s.meta_sha256, s.id);
  const Json meta = parse_json_text(std::string(meta_bytes.begin(), meta_bytes.end()), s.meta_file);
  DatasetEntry e;
  e.id = s.id;
  e.parent_id = it.id;
  e.family = it.family;
  e.image = decode_png_rgb8(img);
  e.field = restore_field(decode_field_png(gt), meta);
  e.mask = ValidityMask::from_run_lengths(e.field.width(), e.field.height(),
                                          meta.at("mask_rle").get<std::vector<std::uint32_t>>());
  return e;
}

std::vector<DatasetEntry> load(const fs::path& dir) {
  const Dataset d = Dataset::open(dir);
  std::vector<DatasetEntry> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out.push_back(d.get(i));
  return out;
}

}  // namespace filmetric
