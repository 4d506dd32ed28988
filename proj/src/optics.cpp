#include "filmetric/optics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "filmetric/error.hpp"
#include "filmetric/parallel.hpp"

namespace filmetric {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Fresnel amplitude coefficients and film cosine for one stack. Nothing here
// depends on wavelength since the media are dispersion-free.
struct ThinFilm {
  double rs12, rs23, rp12, rp23;
  double optical_factor;  // 4*pi*n_film*cos(theta_film); phase 2*beta = factor*h/lambda

  explicit ThinFilm(const FilmStack& s) {
    s.validate();
    const double theta = s.incidence_angle_deg * std::numbers::pi / 180.0;
    const double sin_a = std::sin(theta);
    const double cos_a = std::cos(theta);
    const double sin_f = s.n_ambient * sin_a / s.n_film;
    const double sin_s = s.n_ambient * sin_a / s.n_substrate;
    const double cos_f = std::sqrt(1.0 - sin_f * sin_f);
    const double cos_s = std::sqrt(1.0 - sin_s * sin_s);
    const double na = s.n_ambient, nf = s.n_film, ns = s.n_substrate;
    rs12 = (na * cos_a - nf * cos_f) / (na * cos_a + nf * cos_f);
    rs23 = (nf * cos_f - ns * cos_s) / (nf * cos_f + ns * cos_s);
    rp12 = (nf * cos_a - na * cos_f) / (nf * cos_a + na * cos_f);
    rp23 = (ns * cos_f - nf * cos_s) / (ns * cos_f + nf * cos_s);
    optical_factor = 4.0 * std::numbers::pi * nf * cos_f;
  }

  static double airy(double r12, double r23, std::complex<double> phasor) {
    const std::complex<double> r = (r12 + r23 * phasor) / (1.0 + r12 * r23 * phasor);
    return std::norm(r);
  }

  double reflectance(double wavelength_nm, double thickness_nm) const {
    const double two_beta = optical_factor * thickness_nm / wavelength_nm;
    const std::complex<double> phasor = std::polar(1.0, -two_beta);
    return 0.5 * (airy(rs12, rs23, phasor) + airy(rp12, rp23, phasor));
  }
};

struct Quadrature {
  std::vector<double> wavelengths;
  std::array<std::vector<double>, 3> weights;  // trapezoid weight * integrand factors
};

Quadrature make_quadrature(const SpectralSetup& setup) {
  const SpectralCurve* curves[] = {&setup.illuminant, &setup.filter,
                                   &setup.sensitivities[0], &setup.sensitivities[1],
                                   &setup.sensitivities[2]};
  double lo = -1e300, hi = 1e300;
  for (const auto* c : curves) {
    lo = std::max(lo, c->min_wavelength());
    hi = std::min(hi, c->max_wavelength());
  }
  if (!(hi - lo >= 100.0))
    throw ConfigError("spectral curves must overlap on at least 100 nm (overlap is " +
                      std::to_string(std::max(0.0, hi - lo)) + " nm)");

  std::vector<double> grid{lo, hi};
  for (const auto* c : curves)
    for (double w : c->wavelengths())
      if (w > lo && w < hi) grid.push_back(w);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  Quadrature q;
  q.wavelengths = grid;
  const std::size_t n = grid.size();
  for (int c = 0; c < 3; ++c) q.weights[c].assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double dw = 0.0;
    if (k > 0) dw += 0.5 * (grid[k] - grid[k - 1]);
    if (k + 1 < n) dw += 0.5 * (grid[k + 1] - grid[k]);
    const double common = setup.illuminant(grid[k]) * setup.filter(grid[k]) * dw;
    for (int c = 0; c < 3; ++c)
      q.weights[c][k] = common * setup.sensitivities[c](grid[k]);
  }
  return q;
}

}  // namespace

// ---------------------------------------------------------------- SpectralCurve

SpectralCurve::SpectralCurve(std::vector<double> wavelengths_nm, std::vector<double> values)
    : wavelengths_(std::move(wavelengths_nm)), values_(std::move(values)) {
  if (wavelengths_.size() != values_.size())
    throw ConfigError("spectral curve: wavelength and value counts differ");
  if (wavelengths_.size() < 2)
    throw ConfigError("spectral curve needs at least 2 samples");
  for (std::size_t i = 0; i < wavelengths_.size(); ++i) {
    if (!std::isfinite(wavelengths_[i]) || !std::isfinite(values_[i]))
      throw ConfigError("spectral curve: non-finite sample");
    if (values_[i] < 0.0) throw ConfigError("spectral curve: negative value");
    if (i > 0 && !(wavelengths_[i] > wavelengths_[i - 1]))
      throw ConfigError("spectral curve: wavelengths must be strictly ascending");
  }
  if (wavelengths_.front() <= 0.0)
    throw ConfigError("spectral curve: wavelengths must be positive");
}

double SpectralCurve::operator()(double wl) const {
  if (wl < wavelengths_.front() || wl > wavelengths_.back()) return 0.0;
  const auto it = std::lower_bound(wavelengths_.begin(), wavelengths_.end(), wl);
  const auto k = static_cast<std::size_t>(it - wavelengths_.begin());
  if (wavelengths_[k] == wl) return values_[k];
  const double t = (wl - wavelengths_[k - 1]) / (wavelengths_[k] - wavelengths_[k - 1]);
  return values_[k - 1] + t * (values_[k] - values_[k - 1]);
}

SpectralCurve SpectralCurve::scaled(double factor) const {
  if (!(factor > 0.0)) throw ConfigError("spectral curve scale must be positive");
  auto v = values_;
  for (auto& x : v) x *= factor;
  return SpectralCurve(wavelengths_, std::move(v));
}

SpectralCurve SpectralCurve::parse(const std::string& text) {
  std::vector<double> wl, val;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double w, v;
    if (!(fields >> w)) continue;  // blank or comment-only
    if (!(fields >> v))
      throw ConfigError("spectral curve line " + std::to_string(line_no) +
                        ": expected two columns");
    wl.push_back(w);
    val.push_back(v);
  }
  return SpectralCurve(std::move(wl), std::move(val));
}

SpectralCurve SpectralCurve::load(const std::filesystem::path& path) {
  try {
    return parse(read_text(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void SpectralCurve::save(const std::filesystem::path& path, const std::string& comment) const {
  std::string text;
  if (!comment.empty()) text += "# " + comment + "\n";
  text += "# wavelength_nm\tvalue\n";
  for (std::size_t i = 0; i < wavelengths_.size(); ++i)
    text += fmt9(wavelengths_[i]) + "\t" + fmt9(values_[i]) + "\n";
  write_text(path, text);
}

SpectralCurve gaussian_bands(std::span<const double> centers_nm, double fwhm_nm,
                             double lo_nm, double hi_nm, double step_nm) {
  const double sigma = fwhm_nm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  std::vector<double> wl, val;
  const auto n = static_cast<std::size_t>(std::llround((hi_nm - lo_nm) / step_nm)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = lo_nm + step_nm * static_cast<double>(i);
    double v = 0.0;
    for (double c : centers_nm) v += std::exp(-0.5 * (w - c) * (w - c) / (sigma * sigma));
    wl.push_back(w);
    val.push_back(v);
  }
  return SpectralCurve(std::move(wl), std::move(val));
}

SpectralSetup SpectralSetup::defaults() {
  static constexpr double kBands[] = {460.0, 540.0, 620.0};
  std::vector<double> wl, flat;
  for (int w = 380; w <= 780; ++w) {
    wl.push_back(w);
    flat.push_back(1.0);
  }
  const double red[] = {620.0}, green[] = {540.0}, blue[] = {460.0};
  return SpectralSetup{
      SpectralCurve(wl, flat),
      gaussian_bands(kBands, 25.0),
      {gaussian_bands(red, 60.0), gaussian_bands(green, 60.0), gaussian_bands(blue, 60.0)}};
}

SpectralSetup SpectralSetup::monochromatic(double wavelength_nm) {
  SpectralSetup setup = defaults();
  std::vector<double> wl, v;
  for (int w = 380; w <= 780; ++w) {
    wl.push_back(w);
    v.push_back(w == wavelength_nm ? 1.0 : 0.0);
  }
  if (std::find(v.begin(), v.end(), 1.0) == v.end())
    throw ConfigError("monochromatic wavelength must be an integer in [381, 779] nm");
  setup.illuminant = SpectralCurve(std::move(wl), std::move(v));
  return setup;
}

// -------------------------------------------------------------------- FilmStack

void FilmStack::validate() const {
  if (!(n_ambient >= 1.0 && n_film >= 1.0 && n_substrate >= 1.0))
    throw ConfigError("refractive indices must be >= 1");
  if (!(incidence_angle_deg >= 0.0 && incidence_angle_deg < 90.0))
    throw ConfigError("incidence angle must lie in [0, 90) degrees");
  const double s = n_ambient * std::sin(incidence_angle_deg * std::numbers::pi / 180.0);
  if (s >= n_film || s >= n_substrate)
    throw ConfigError("total internal reflection geometry is not supported");
}

double FilmStack::film_cos_theta() const {
  validate();
  const double sin_f =
      n_ambient * std::sin(incidence_angle_deg * std::numbers::pi / 180.0) / n_film;
  return std::sqrt(1.0 - sin_f * sin_f);
}

double FilmStack::period_nm(double wavelength_nm) const {
  return wavelength_nm / (2.0 * n_film * film_cos_theta());
}

double reflectance(const FilmStack& stack, double wavelength_nm, double thickness_nm) {
  if (!(wavelength_nm > 0.0)) throw ConfigError("wavelength must be positive");
  if (!(thickness_nm >= 0.0)) throw ConfigError("thickness must be non-negative");
  return ThinFilm(stack).reflectance(wavelength_nm, thickness_nm);
}

// --------------------------------------------------------------------- Colormap

void ThicknessGrid::validate() const {
  if (!(step_nm > 0.0)) throw ConfigError("colormap grid step must be positive");
  if (count < 2) throw ConfigError("colormap grid needs at least 2 samples");
  if (!(min_nm >= 0.0)) throw ConfigError("colormap grid must start at >= 0 nm");
}

Colormap::Colormap(ThicknessGrid grid, std::vector<RgbF> rgb, std::string note)
    : grid_(grid), rgb_(std::move(rgb)), note_(std::move(note)) {
  grid_.validate();
  if (rgb_.size() != grid_.count)
    throw ConfigError("colormap sample count does not match its grid");
  for (const auto& s : rgb_)
    for (double v : s)
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("colormap values must lie in [0, 1]");
}

RgbF Colormap::lookup(double h) const {
  const double pos = (h - grid_.min_nm) / grid_.step_nm;
  const double last = static_cast<double>(grid_.count - 1);
  if (!(pos >= 0.0 && pos <= last))
    throw ConfigError("thickness " + std::to_string(h) + " nm outside colormap range [" +
                      std::to_string(grid_.min_nm) + ", " + std::to_string(grid_.max_nm()) +
                      "]");
  const auto k = static_cast<std::size_t>(std::floor(pos));
  const double t = pos - static_cast<double>(k);
  if (t == 0.0 || k + 1 >= grid_.count) return rgb_[std::min(k, grid_.count - 1)];
  RgbF out;
  for (int c = 0; c < 3; ++c) out[c] = rgb_[k][c] + t * (rgb_[k + 1][c] - rgb_[k][c]);
  return out;
}

std::string Colormap::serialize() const {
  std::string text = "# filmetric colormap v1\n";
  text += "# normalization: " + note_ + "\n";
  text += "grid " + fmt9(grid_.min_nm) + " " + fmt9(grid_.step_nm) + " " +
          std::to_string(grid_.count) + "\n";
  for (std::size_t i = 0; i < rgb_.size(); ++i) {
    text += fmt9(grid_.at(i));
    for (double v : rgb_[i]) text += " " + fmt9(v);
    text += "\n";
  }
  return text;
}

Colormap Colormap::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "# filmetric colormap v1")
    throw IoError("not a filmetric colormap (missing v1 header)");
  std::string note;
  ThicknessGrid grid;
  bool have_grid = false;
  std::vector<RgbF> rgb;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# normalization: ", 0) == 0) {
      note = line.substr(17);
      continue;
    }
    if (line[0] == '#') continue;
    std::istringstream fields(line);
    if (!have_grid) {
      std::string tag;
      if (!(fields >> tag >> grid.min_nm >> grid.step_nm >> grid.count) || tag != "grid")
        throw IoError("colormap: malformed grid line");
      have_grid = true;
      rgb.reserve(grid.count);
      continue;
    }
    double h;
    RgbF s;
    if (!(fields >> h >> s[0] >> s[1] >> s[2])) throw IoError("colormap: malformed sample line");
    rgb.push_back(s);
  }
  if (!have_grid) throw IoError("colormap: missing grid line");
  if (rgb.size() != grid.count)
    throw IoError("colormap: expected " + std::to_string(grid.count) + " samples, found " +
                  std::to_string(rgb.size()));
  return Colormap(grid, std::move(rgb), note);
}

void Colormap::save(const std::filesystem::path& path) const { write_text(path, serialize()); }

Colormap Colormap::load(const std::filesystem::path& path) {
  try {
    return deserialize(read_text(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void Colormap::save_csv(const std::filesystem::path& path) const {
  std::string text = "thickness_nm,r,g,b\n";
  for (std::size_t i = 0; i < rgb_.size(); ++i)
    text += fmt9(grid_.at(i)) + "," + fmt9(rgb_[i][0]) + "," + fmt9(rgb_[i][1]) + "," +
            fmt9(rgb_[i][2]) + "\n";
  write_text(path, text);
}

RgbF channel_weights(const SpectralSetup& setup) {
  const Quadrature q = make_quadrature(setup);
  RgbF w{};
  for (int c = 0; c < 3; ++c)
    for (double x : q.weights[c]) w[c] += x;
  return w;
}

Colormap build_colormap(const FilmStack& stack, const SpectralSetup& setup,
                        const ThicknessGrid& grid, int threads) {
  grid.validate();
  const ThinFilm film(stack);
  const Quadrature q = make_quadrature(setup);

  std::vector<RgbF> raw(grid.count);
  parallel_for(grid.count, threads, [&](std::size_t i) {
    const double h = grid.at(i);
    RgbF acc{};
    for (std::size_t k = 0; k < q.wavelengths.size(); ++k) {
      if (q.weights[0][k] == 0.0 && q.weights[1][k] == 0.0 && q.weights[2][k] == 0.0)
        continue;
      const double r = film.reflectance(q.wavelengths[k], h);
      for (int c = 0; c < 3; ++c) acc[c] += q.weights[c][k] * r;
    }
    raw[i] = acc;
  });

  double peak = 0.0;
  for (const auto& s : raw)
    for (double v : s) peak = std::max(peak, v);
  if (!(peak > 0.0) || !std::isfinite(peak))
    throw ConfigError("invalid spectral configuration: colormap integral is zero everywhere");

  for (auto& s : raw)
    for (double& v : s) v /= peak;
  return Colormap(grid, std::move(raw), "global_max raw=" + fmt9(peak));
}

}  // namespace filmetric
