#include "filmetric/config_json.hpp"

#include <fstream>
#include <sstream>

namespace filmetric {

JsonReader::JsonReader(const Json& j, std::string context) : j_(j), context_(std::move(context)) {
  if (!j_.is_object()) throw ConfigError(context_ + ": expected a JSON object");
}

const Json* JsonReader::child(const char* key) {
  seen_.insert(key);
  auto it = j_.find(key);
  if (it == j_.end() || it->is_null()) return nullptr;
  if (!it->is_object()) throw ConfigError(context_ + "." + key + ": expected an object");
  return &*it;
}

void JsonReader::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it)
    if (!seen_.count(it.key())) throw ConfigError(context_ + ": unknown key '" + it.key() + "'");
}

Json to_json(const FilmStack& v) {
  return {{"n_ambient", v.n_ambient},
          {"n_film", v.n_film},
          {"n_substrate", v.n_substrate},
          {"incidence_angle_deg", v.incidence_angle_deg}};
}

FilmStack film_stack_from_json(const Json& j) {
  FilmStack v;
  JsonReader r(j, "stack");
  r.get("n_ambient", v.n_ambient);
  r.get("n_film", v.n_film);
  r.get("n_substrate", v.n_substrate);
  r.get("incidence_angle_deg", v.incidence_angle_deg);
  r.finish();
  v.validate();
  return v;
}

Json to_json(const ThicknessGrid& v) {
  return {{"min_nm", v.min_nm}, {"step_nm", v.step_nm}, {"count", v.count}};
}

ThicknessGrid grid_from_json(const Json& j) {
  ThicknessGrid v;
  JsonReader r(j, "grid");
  r.get("min_nm", v.min_nm);
  r.get("step_nm", v.step_nm);
  r.get("count", v.count);
  r.finish();
  v.validate();
  return v;
}

Json to_json(const AugmentConfig& v) {
  return {{"five_crop", v.five_crop},
          {"crop_size", v.crop_size},
          {"flips", v.flips},
          {"p_hflip", v.p_hflip},
          {"p_vflip", v.p_vflip},
          {"pupil_mask", v.pupil_mask},
          {"p_pupil", v.p_pupil},
          {"pupil_diameter_min_px", v.pupil_diameter_min_px},
          {"pupil_diameter_max_px", v.pupil_diameter_max_px},
          {"shadow", v.shadow},
          {"p_shadow", v.p_shadow},
          {"shadow_min_factor", v.shadow_min_factor},
          {"blur", v.blur},
          {"p_blur", v.p_blur},
          {"blur_sigma_min", v.blur_sigma_min},
          {"blur_sigma_max", v.blur_sigma_max},
          {"color_jitter", v.color_jitter},
          {"p_jitter", v.p_jitter},
          {"brightness", v.brightness},
          {"contrast", v.contrast},
          {"saturation", v.saturation},
          {"hue", v.hue},
          {"gaussian_noise", v.gaussian_noise},
          {"p_gaussian_noise", v.p_gaussian_noise},
          {"noise_std", v.noise_std},
          {"poisson_noise", v.poisson_noise},
          {"p_poisson_noise", v.p_poisson_noise},
          {"poisson_lambda", v.poisson_lambda},
          {"mean_filter", v.mean_filter},
          {"p_mean_filter", v.p_mean_filter},
          {"seed", v.seed}};
}

AugmentConfig augment_from_json(const Json& j) {
  AugmentConfig v;
  JsonReader r(j, "augment");
  // "preset": "full" starts from the all-on defaults instead of all-off.
  std::string preset = "none";
  r.get("preset", preset);
  if (preset == "full")
    v = AugmentConfig::full_defaults();
  else if (preset != "none")
    throw ConfigError("augment.preset must be 'none' or 'full'");
  r.get("five_crop", v.five_crop);
  r.get("crop_size", v.crop_size);
  r.get("flips", v.flips);
  r.get("p_hflip", v.p_hflip);
  r.get("p_vflip", v.p_vflip);
  r.get("pupil_mask", v.pupil_mask);
  r.get("p_pupil", v.p_pupil);
  r.get("pupil_diameter_min_px", v.pupil_diameter_min_px);
  r.get("pupil_diameter_max_px", v.pupil_diameter_max_px);
  r.get("shadow", v.shadow);
  r.get("p_shadow", v.p_shadow);
  r.get("shadow_min_factor", v.shadow_min_factor);
  r.get("blur", v.blur);
  r.get("p_blur", v.p_blur);
  r.get("blur_sigma_min", v.blur_sigma_min);
  r.get("blur_sigma_max", v.blur_sigma_max);
  r.get("color_jitter", v.color_jitter);
  r.get("p_jitter", v.p_jitter);
  r.get("brightness", v.brightness);
  r.get("contrast", v.contrast);
  r.get("saturation", v.saturation);
  r.get("hue", v.hue);
  r.get("gaussian_noise", v.gaussian_noise);
  r.get("p_gaussian_noise", v.p_gaussian_noise);
  r.get("noise_std", v.noise_std);
  r.get("poisson_noise", v.poisson_noise);
  r.get("p_poisson_noise", v.p_poisson_noise);
  r.get("poisson_lambda", v.poisson_lambda);
  r.get("mean_filter", v.mean_filter);
  r.get("p_mean_filter", v.p_mean_filter);
  r.get("seed", v.seed);
  r.finish();
  v.validate();
  return v;
}

Json to_json(const ReconstructConfig& v) {
  return {{"candidates", v.candidates},
          {"smoothness_weight", v.smoothness_weight},
          {"max_iters", v.max_iters},
          {"multiscale_levels", v.multiscale_levels},
          {"scale_sigma", v.scale_sigma},
          {"color_metric", "squared_euclidean_rgb"}};
}

ReconstructConfig reconstruct_from_json(const Json& j) {
  ReconstructConfig v;
  JsonReader r(j, "reconstruct");
  r.get("candidates", v.candidates);
  r.get("smoothness_weight", v.smoothness_weight);
  r.get("max_iters", v.max_iters);
  r.get("multiscale_levels", v.multiscale_levels);
  r.get("scale_sigma", v.scale_sigma);
  r.get("threads", v.threads);
  std::string metric = "squared_euclidean_rgb";
  r.get("color_metric", metric);
  if (metric != "squared_euclidean_rgb")
    throw ConfigError("reconstruct.color_metric: only squared_euclidean_rgb is supported");
  r.finish();
  v.validate();
  return v;
}

Json to_json(const RangeConstraint& v) {
  return {{"abs_min_nm", v.abs_min_nm},
          {"abs_max_nm", v.abs_max_nm},
          {"span_min_nm", v.span_min_nm},
          {"span_max_nm", v.span_max_nm}};
}

RangeConstraint range_from_json(const Json& j) {
  RangeConstraint v;
  JsonReader r(j, "range");
  r.get("abs_min_nm", v.abs_min_nm);
  r.get("abs_max_nm", v.abs_max_nm);
  r.get("span_min_nm", v.span_min_nm);
  r.get("span_max_nm", v.span_max_nm);
  r.finish();
  v.validate();
  return v;
}

Json to_json(const FieldSampling& v) {
  return {{"octaves_min", v.octaves_min}, {"octaves_max", v.octaves_max},
          {"scale_min_px", v.scale_min_px}, {"scale_max_px", v.scale_max_px},
          {"peaks_min", v.peaks_min},     {"peaks_max", v.peaks_max},
          {"sigma_min", v.sigma_min},     {"sigma_max", v.sigma_max}};
}

FieldSampling sampling_from_json(const Json& j) {
  FieldSampling v;
  JsonReader r(j, "sampling");
  r.get("octaves_min", v.octaves_min);
  r.get("octaves_max", v.octaves_max);
  r.get("scale_min_px", v.scale_min_px);
  r.get("scale_max_px", v.scale_max_px);
  r.get("peaks_min", v.peaks_min);
  r.get("peaks_max", v.peaks_max);
  r.get("sigma_min", v.sigma_min);
  r.get("sigma_max", v.sigma_max);
  r.finish();
  v.validate();
  return v;
}

Json to_json(const EvalOptions& v) {
  return {{"clamp_lo_um", v.clamp_lo_um},
          {"clamp_hi_um", v.clamp_hi_um},
          {"log_floor_nm", v.log_floor_nm},
          {"silog_lambda", v.silog_lambda}};
}

EvalOptions eval_from_json(const Json& j) {
  EvalOptions v;
  JsonReader r(j, "eval");
  r.get("clamp_lo_um", v.clamp_lo_um);
  r.get("clamp_hi_um", v.clamp_hi_um);
  r.get("log_floor_nm", v.log_floor_nm);
  r.get("silog_lambda", v.silog_lambda);
  r.finish();
  v.validate();
  return v;
}

Json to_json(const PerlinParams& v) {
  return {{"persistence", v.persistence},
          {"lacunarity", v.lacunarity},
          {"octaves", v.octaves},
          {"scale_px", v.scale_px},
          {"seed", v.seed}};
}

Json to_json(const GaussianParams& v) {
  return {{"n_peaks", v.n_peaks},
          {"sigma_min", v.sigma_min},
          {"sigma_max", v.sigma_max},
          {"seed", v.seed}};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(what + ": invalid JSON (" + e.what() + ")");
  }
}

Json read_json_file(const std::filesystem::path& path) {
  return parse_json_text(read_text_file(path), path.string());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace filmetric
