#pragma once

#include <filesystem>
#include <set>
#include <string>

#include "json.hpp"

#include "filmetric/error.hpp"
#include "filmetric/fieldgen.hpp"
#include "filmetric/metrics.hpp"
#include "filmetric/optics.hpp"
#include "filmetric/reconstruct.hpp"
#include "filmetric/synth.hpp"

namespace filmetric {

using Json = nlohmann::ordered_json;

/// Reads optional keys from one JSON object into existing defaults and
/// rejects keys it was never asked about.
class JsonReader {
 public:
  JsonReader(const Json& j, std::string context);

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(context_ + "." + key + ": wrong type");
    }
  }
  bool has(const char* key) const { return j_.contains(key); }
  const Json* child(const char* key);
  void finish() const;

 private:
  const Json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

Json to_json(const FilmStack& v);
Json to_json(const ThicknessGrid& v);
Json to_json(const AugmentConfig& v);
Json to_json(const ReconstructConfig& v);
Json to_json(const RangeConstraint& v);
Json to_json(const FieldSampling& v);
Json to_json(const EvalOptions& v);
Json to_json(const PerlinParams& v);
Json to_json(const GaussianParams& v);

// Each fills unspecified keys from the type's defaults and validates.
FilmStack film_stack_from_json(const Json& j);
ThicknessGrid grid_from_json(const Json& j);
AugmentConfig augment_from_json(const Json& j);
ReconstructConfig reconstruct_from_json(const Json& j);
RangeConstraint range_from_json(const Json& j);
FieldSampling sampling_from_json(const Json& j);
EvalOptions eval_from_json(const Json& j);

/// Parse errors are ConfigError; unreadable files are IoError.
Json read_json_file(const std::filesystem::path& path);
Json parse_json_text(const std::string& text, const std::string& what);

/// Writes to a sibling temporary then renames over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace filmetric
