#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "filmetric/config_json.hpp"
#include "filmetric/error.hpp"
#include "filmetric/fieldgen.hpp"
#include "filmetric/image.hpp"
#include "filmetric/optics.hpp"
#include "filmetric/synth.hpp"

namespace filmetric {

enum class Family { perlin, gaussian, experimental };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

struct DatasetSpec {
  std::size_t total_count = 100;
  double frac_perlin = 0.5;
  double frac_gaussian = 0.5;
  double frac_experimental = 0.0;
  // Perlin and Gaussian in [0.25, 0.5], experimental in [0, 0.5].
  bool enforce_fraction_policy = true;
  std::uint64_t master_seed = 20240501;
  int field_size = 256;
  AugmentConfig augment = AugmentConfig::full_defaults();
  RangeConstraint range;
  FieldSampling sampling;
  std::string colormap_ref;          // colormap file; empty = built-in default
  std::string experimental_source;   // directory of *_img.png / *_gt.png pairs
  std::string split = "train";

  void validate() const;
  Json to_json() const;
  static DatasetSpec from_json(const Json& j);
};

/// Largest-remainder apportionment of `total` over the fractions. Ties in
/// the remainder go to the earlier family.
std::array<std::size_t, 3> family_counts(std::size_t total, const std::array<double, 3>& fractions);

/// One written output pair: the whole field, or one of its five crops.
struct SubItemRecord {
  std::string id;
  std::string img_file, gt_file, meta_file;  // relative to the dataset root
  std::string img_sha256, gt_sha256, meta_sha256;
  double field_min = 0.0, field_max = 0.0;
  std::size_t n_valid = 0;
};

struct ItemRecord {
  std::size_t index = 0;
  std::string id;
  Family family = Family::perlin;
  std::uint64_t seed = 0;
  double field_min = 0.0, field_max = 0.0, field_mean = 0.0;  // before augmentation
  std::string source;  // experimental pair basename
  std::vector<SubItemRecord> subitems;
};

struct Manifest {
  std::string format = "filmetric-dataset/1";
  std::string version;
  DatasetSpec spec;
  std::string colormap_sha256;
  std::array<std::size_t, 3> counts{};
  std::vector<ItemRecord> items;

  Json to_json() const;
  static Manifest from_json(const Json& j);
};

/// Experimental pool entry: `<name>_img.png` + `<name>_gt.png` (+ optional
/// `<name>_meta.json`), listed in name order.
struct ExperimentalPair {
  std::string name;
  std::filesystem::path img, gt, meta;
};
std::vector<ExperimentalPair> scan_pairs(const std::filesystem::path& dir);

/// Writes `items/`, `colormap.txt` and finally `manifest.json`. The output
/// directory must be empty, absent, or a previous dataset (replaced).
Manifest generate(const DatasetSpec& spec, const std::filesystem::path& out_dir, int threads = 1);

/// One item's outputs before serialization.
struct GeneratedItem {
  ItemRecord record;  // subitems carry ids only
  Json params;
  std::vector<AugmentedSample> samples;
};

GeneratedItem synthesize_item(const DatasetSpec& spec, const Colormap& colormap,
                              std::size_t index, Family family,
                              const std::vector<ExperimentalPair>& pool);

/// Rebuilds one item of an existing dataset from its manifest alone.
GeneratedItem regenerate_item(const std::filesystem::path& dir, const std::string& item_id);

class DatasetError : public IoError {
 public:
  enum class Code { no_manifest, bad_manifest, missing_file, checksum_mismatch };
  DatasetError(Code code, const std::string& item, const std::string& what)
      : IoError(what), code_(code), item_(item) {}
  Code code() const noexcept { return code_; }
  const std::string& item() const noexcept { return item_; }

 private:
  Code code_;
  std::string item_;
};

struct DatasetEntry {
  std::string id;
  std::string parent_id;
  Family family = Family::perlin;
  Interferogram image;
  ThicknessField field;
  ValidityMask mask;
};

/// Read access in manifest order; every file is checksum-verified on read.
class Dataset {
 public:
  static Dataset open(const std::filesystem::path& dir);

  const Manifest& manifest() const noexcept { return manifest_; }
  std::size_t size() const noexcept { return refs_.size(); }
  DatasetEntry get(std::size_t i) const;

 private:
  std::filesystem::path dir_;
  Manifest manifest_;
  std::vector<std::pair<std::size_t, std::size_t>> refs_;  // (item, subitem)
};

std::vector<DatasetEntry> load(const std::filesystem::path& dir);

/// Field PNG decode plus sidecar: values clamped to [min, max], the recorded
/// extreme pixels set exactly.
ThicknessField restore_field(const ThicknessField& decoded, const Json& meta);

}  // namespace filmetric
