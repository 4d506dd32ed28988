#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "filmetric/checksum.hpp"
#include "filmetric/dataset.hpp"
#include "filmetric/png_io.hpp"
#include "helpers.hpp"

using namespace filmetric;
namespace fs = std::filesystem;

namespace {

// Reference apportionment: floors, then hand out the rest by descending
// remainder, earliest family first on ties.
std::array<std::size_t, 3> oracle_counts(std::size_t total, std::array<double, 3> f) {
  std::array<std::size_t, 3> c{};
  std::vector<std::pair<double, int>> rem;
  std::size_t used = 0;
  for (int k = 0; k < 3; ++k) {
    const double e = f[k] * total;
    c[k] = static_cast<std::size_t>(e);
    used += c[k];
    rem.emplace_back(-(e - c[k]), k);
  }
  std::sort(rem.begin(), rem.end());
  for (std::size_t i = 0; used < total; ++i, ++used) ++c[rem[i].second];
  return c;
}

std::map<std::string, std::string> tree_digest(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = sha256_file(e.path());
  return out;
}

DatasetSpec small_spec(std::size_t total = 6) {
  DatasetSpec s;
  s.total_count = total;
  s.field_size = 48;
  s.augment = AugmentConfig::full_defaults();
  s.augment.crop_size = 24;
  s.master_seed = 31337;
  return s;
}

}  // namespace

TEST(FamilyCounts, ExactAndLargestRemainder) {
  EXPECT_EQ(family_counts(4, {0.5, 0.5, 0.0}), (std::array<std::size_t, 3>{2, 2, 0}));
  EXPECT_EQ(family_counts(10, {0.33, 0.33, 0.34}), (std::array<std::size_t, 3>{3, 3, 4}));
  EXPECT_EQ(family_counts(5000, {0.375, 0.375, 0.25}), (std::array<std::size_t, 3>{1875, 1875, 1250}));
  for (std::size_t total : {1u, 2u, 3u, 7u, 11u, 99u, 1001u})
    for (auto f : {std::array<double, 3>{0.5, 0.5, 0.0}, {0.25, 0.25, 0.5}, {0.4, 0.35, 0.25},
                   {0.3, 0.3, 0.4}, {1.0 / 3, 1.0 / 3, 1.0 / 3}}) {
      const auto c = family_counts(total, f);
      EXPECT_EQ(c, oracle_counts(total, f)) << total;
      EXPECT_EQ(c[0] + c[1] + c[2], total);
    }
}

TEST(DatasetSpec, ValidatesPolicy) {
  DatasetSpec s;
  EXPECT_NO_THROW(s.validate());
  s.frac_perlin = 0.6;
  s.frac_gaussian = 0.4;
  EXPECT_THROW(s.validate(), ConfigError);
  s.enforce_fraction_policy = false;
  EXPECT_NO_THROW(s.validate());
  s.frac_gaussian = 0.5;
  EXPECT_THROW(s.validate(), ConfigError);  // sums to 1.1
  s = {};
  s.total_count = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(DatasetSpec::from_json(Json{{"total_cont", 5}}), ConfigError);
}

TEST(DatasetSpec, JsonRoundTrip) {
  DatasetSpec s = small_spec();
  s.split = "test";
  const auto back = DatasetSpec::from_json(s.to_json());
  EXPECT_EQ(back.to_json(), s.to_json());
  // No augment key means the full augmentation preset.
  EXPECT_EQ(to_json(DatasetSpec::from_json(Json::object()).augment), to_json(AugmentConfig::full_defaults()));
}

TEST(Dataset, GenerateWritesLayoutAndCounts) {
  testutil::TempDir tmp("ds");
  const auto m = generate(small_spec(4), tmp.path() / "d");
  EXPECT_EQ(m.counts, (std::array<std::size_t, 3>{2, 2, 0}));
  ASSERT_EQ(m.items.size(), 4u);
  EXPECT_EQ(m.items[0].family, Family::perlin);
  EXPECT_EQ(m.items[3].family, Family::gaussian);
  EXPECT_TRUE(fs::exists(tmp.path() / "d" / "manifest.json"));
  EXPECT_TRUE(fs::exists(tmp.path() / "d" / "colormap.txt"));
  for (const auto& it : m.items) {
    ASSERT_EQ(it.subitems.size(), 5u);
    EXPECT_EQ(it.subitems[2].id, it.id + "_c2");
    for (const auto& s : it.subitems) {
      EXPECT_TRUE(fs::exists(tmp.path() / "d" / s.img_file));
      EXPECT_EQ(sha256_file(tmp.path() / "d" / s.gt_file), s.gt_sha256);
    }
    EXPECT_GE(it.field_min, 0.0);
    EXPECT_LE(it.field_max, 4000.0);
    EXPECT_GE(it.field_max - it.field_min, 250.0 - 1e-9);
    EXPECT_LE(it.field_max - it.field_min, 2500.0 + 1e-9);
  }
  const auto j = read_json_file(tmp.path() / "d" / "manifest.json");
  EXPECT_EQ(j.at("colormap_sha256"), sha256_file(tmp.path() / "d" / "colormap.txt"));
  EXPECT_EQ(j.at("items").size(), 4u);
}

TEST(Dataset, DeterministicAcrossRunsAndThreads) {
  testutil::TempDir tmp("det");
  const auto spec = small_spec(7);
  generate(spec, tmp.path() / "a", 1);
  generate(spec, tmp.path() / "b", 4);
  const auto da = tree_digest(tmp.path() / "a"), db = tree_digest(tmp.path() / "b");
  EXPECT_EQ(da.size(), 1u + 1u + 7u * 5u * 3u);
  EXPECT_EQ(da, db);
  // Regenerating over an existing dataset replaces it identically.
  generate(spec, tmp.path() / "a", 2);
  EXPECT_EQ(tree_digest(tmp.path() / "a"), da);
  auto other = spec;
  other.master_seed += 1;
  generate(other, tmp.path() / "c", 1);
  EXPECT_NE(tree_digest(tmp.path() / "c"), da);
}

TEST(Dataset, LoadRoundTripsAgainstRegeneration) {
  testutil::TempDir tmp("load");
  const auto dir = tmp.path() / "d";
  const auto m = generate(small_spec(3), dir);
  const auto entries = load(dir);
  ASSERT_EQ(entries.size(), 15u);
  std::size_t k = 0;
  for (const auto& it : m.items) {
    const GeneratedItem g = regenerate_item(dir, it.id);
    ASSERT_EQ(g.samples.size(), 5u);
    for (const auto& s : g.samples) {
      const auto& e = entries[k++];
      EXPECT_EQ(e.parent_id, it.id);
      EXPECT_EQ(e.image, s.image);
      EXPECT_EQ(e.mask, s.mask);
      for (std::size_t p = 0; p < s.field.size(); ++p) EXPECT_LE(std::abs(e.field[p] - s.field[p]), 0.5);
      // Extremes are exact through the sidecar.
      EXPECT_EQ(e.field.min(), s.field.min());
      EXPECT_EQ(e.field.max(), s.field.max());
    }
  }
}

TEST(Dataset, RestoreFieldClampsAndSetsExtremes) {
  ThicknessField decoded(16, 16, 1000.0);
  decoded[3] = 998.0;
  decoded[7] = 1501.0;
  const Json meta{{"field_min", 998.4}, {"field_max", 1500.6}, {"field_min_index", 3}, {"field_max_index", 7}};
  const auto f = restore_field(decoded, meta);
  EXPECT_EQ(f[3], 998.4);
  EXPECT_EQ(f[7], 1500.6);
  EXPECT_EQ(f[0], 1000.0);
  EXPECT_EQ(restore_field(decoded, Json::object()), decoded);
  const Json bad{{"field_min", 1.0}, {"field_max", 2.0}, {"field_min_index", 999}, {"field_max_index", 0}};
  EXPECT_THROW(restore_field(decoded, bad), ConfigError);
}

TEST(Dataset, IntegrityErrors) {
  testutil::TempDir tmp("tamper");
  const auto dir = tmp.path() / "d";
  const auto m = generate(small_spec(2), dir);
  const auto& victim = m.items[1].subitems[3];
  {
    std::ofstream f(dir / victim.img_file, std::ios::app | std::ios::binary);
    f << "x";
  }
  const auto ds = Dataset::open(dir);
  EXPECT_NO_THROW(ds.get(0));
  try {
    ds.get(8);
    FAIL() << "expected checksum error";
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.code(), DatasetError::Code::checksum_mismatch);
    EXPECT_EQ(e.item(), victim.id);
    EXPECT_NE(std::string(e.what()).find(victim.id), std::string::npos);
  }
  fs::remove(dir / m.items[0].subitems[0].gt_file);
  try {
    ds.get(0);
    FAIL() << "expected missing file";
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.code(), DatasetError::Code::missing_file);
  }
  fs::create_directories(tmp.path() / "empty");
  try {
    Dataset::open(tmp.path() / "empty");
    FAIL() << "expected no manifest";
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.code(), DatasetError::Code::no_manifest);
  }
  write_text_atomic(dir / "manifest.json", "{\"format\": \"other\"}");
  try {
    Dataset::open(dir);
    FAIL() << "expected bad manifest";
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.code(), DatasetError::Code::bad_manifest);
  }
}

TEST(Dataset, RefusesForeignOutputDirectory) {
  testutil::TempDir tmp("foreign");
  std::ofstream(tmp.path() / "notes.txt") << "keep me";
  EXPECT_THROW(generate(small_spec(1), tmp.path()), ConfigError);
  EXPECT_TRUE(fs::exists(tmp.path() / "notes.txt"));
}

TEST(Dataset, ExperimentalPoolCycles) {
  testutil::TempDir tmp("exp");
  // A pool of three pairs in the shared file format.
  const auto pool_dir = tmp.path() / "pool";
  DatasetSpec src = small_spec(3);
  src.augment = AugmentConfig{};
  generate(src, tmp.path() / "src");
  fs::create_directories(pool_dir);
  const char* names[] = {"eye_a", "eye_b", "eye_c"};
  for (int k = 0; k < 3; ++k) {
    const std::string id = "00000" + std::to_string(k);
    fs::copy_file(tmp.path() / "src/items" / (id + "_img.png"), pool_dir / (std::string(names[k]) + "_img.png"));
    fs::copy_file(tmp.path() / "src/items" / (id + "_gt.png"), pool_dir / (std::string(names[k]) + "_gt.png"));
    fs::copy_file(tmp.path() / "src/items" / (id + "_meta.json"), pool_dir / (std::string(names[k]) + "_meta.json"));
  }
  ASSERT_EQ(scan_pairs(pool_dir).size(), 3u);

  DatasetSpec s = small_spec(10);
  s.frac_perlin = 0.33;
  s.frac_gaussian = 0.33;
  s.frac_experimental = 0.34;
  s.experimental_source = pool_dir.string();
  const auto m = generate(s, tmp.path() / "mix");
  EXPECT_EQ(m.counts, (std::array<std::size_t, 3>{3, 3, 4}));
  std::vector<std::string> sources;
  std::set<std::uint64_t> seeds;
  for (const auto& it : m.items)
    if (it.family == Family::experimental) {
      sources.push_back(it.source);
      seeds.insert(regenerate_item(tmp.path() / "mix", it.id).params.at("augment_seed").get<std::uint64_t>());
    }
  EXPECT_EQ(sources, (std::vector<std::string>{"eye_a", "eye_b", "eye_c", "eye_a"}));
  EXPECT_EQ(seeds.size(), 4u);
  // The ground truth survives ingestion.
  const auto entries = load(tmp.path() / "mix");
  const auto orig = load(tmp.path() / "src");
  std::size_t exp_entries = 0;
  for (const auto& e : entries) exp_entries += e.family == Family::experimental;
  EXPECT_EQ(exp_entries, 20u);
  EXPECT_EQ(orig.size(), 3u);

  s.experimental_source = (tmp.path() / "nowhere").string();
  EXPECT_THROW(generate(s, tmp.path() / "mix2"), ConfigError);
  s.experimental_source.clear();
  EXPECT_THROW(generate(s, tmp.path() / "mix3"), ConfigError);
}

TEST(Dataset, UnpairedExperimentalImageIsAnError) {
  testutil::TempDir tmp("unpaired");
  write_interferogram(tmp.path() / "x_img.png", Interferogram(16, 16));
  EXPECT_THROW(scan_pairs(tmp.path()), IoError);
}
