#include <cstring>
#include <optional>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "filmetric/config_json.hpp"
#include "filmetric/dataset.hpp"
#include "filmetric/fieldgen.hpp"
#include "filmetric/metrics.hpp"
#include "filmetric/optics.hpp"
#include "filmetric/reconstruct.hpp"
#include "filmetric/rng.hpp"
#include "filmetric/synth.hpp"

namespace py = pybind11;
using namespace filmetric;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8 = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using Bool = py::array_t<bool, py::array::c_style | py::array::forcecast>;

ThicknessField to_field(const F64& a) {
  if (a.ndim() != 2) throw ConfigError("thickness field must be a 2-D array");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  return ThicknessField(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

F64 from_field(const ThicknessField& f) {
  F64 out({f.height(), f.width()});
  std::memcpy(out.mutable_data(), f.values().data(), f.size() * sizeof(double));
  return out;
}

Interferogram to_image(const U8& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw ConfigError("image must be an H x W x 3 uint8 array");
  return Interferogram(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                       std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

U8 from_image(const Interferogram& img) {
  U8 out({img.height(), img.width(), 3});
  std::memcpy(out.mutable_data(), img.data().data(), img.data().size());
  return out;
}

std::optional<ValidityMask> to_mask(const std::optional<Bool>& a) {
  if (!a) return std::nullopt;
  if (a->ndim() != 2) throw ConfigError("mask must be a 2-D array");
  std::vector<std::uint8_t> flags(a->data(), a->data() + a->size());
  return ValidityMask(static_cast<int>(a->shape(1)), static_cast<int>(a->shape(0)), std::move(flags));
}

Bool from_mask(const ValidityMask& m) {
  Bool out({m.height(), m.width()});
  auto* p = out.mutable_data();
  for (std::size_t i = 0; i < m.size(); ++i) p[i] = m.valid(i);
  return out;
}

py::object json_to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict report_dict(const MetricsReport& r) {
  py::dict d;
  d["silog"] = r.silog;
  d["abs_rel"] = r.abs_rel;
  d["log10"] = r.log10;
  d["rms"] = r.rms;
  d["sq_rel"] = r.sq_rel;
  d["log_rms"] = r.log_rms;
  d["mae"] = r.mae;
  d["mse"] = r.mse;
  d["rmse"] = r.rmse;
  d["n_valid"] = r.n_valid;
  d["n_relative"] = r.n_relative;
  return d;
}

}  // namespace

PYBIND11_MODULE(_filmetric, m) {
  m.doc() = "Thin-film interferometry toolkit: colormaps, synthesis, reconstruction and metrics.";
  m.attr("__version__") = FILMETRIC_VERSION;

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<IoError> io_error(m, "IoError", PyExc_OSError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const IoError& e) {
      py::set_error(io_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    }
  });

  m.def(
      "reflectance",
      [](double wavelength_nm, double thickness_nm, double n_ambient, double n_film, double n_substrate,
         double angle_deg) {
        const FilmStack s{n_ambient, n_film, n_substrate, angle_deg};
        s.validate();
        return reflectance(s, wavelength_nm, thickness_nm);
      },
      py::arg("wavelength_nm"), py::arg("thickness_nm"), py::arg("n_ambient") = 1.0, py::arg("n_film") = 1.337,
      py::arg("n_substrate") = 1.42, py::arg("angle_deg") = 0.0);

  py::class_<Colormap>(m, "Colormap")
      .def_static("load", &Colormap::load, py::arg("path"))
      .def("save", &Colormap::save, py::arg("path"))
      .def("lookup", &Colormap::lookup, py::arg("thickness_nm"))
      .def("__len__", &Colormap::size)
      .def_property_readonly("note", &Colormap::normalization_note)
      .def_property_readonly("thickness_nm",
                             [](const Colormap& c) {
                               F64 out(static_cast<py::ssize_t>(c.size()));
                               for (std::size_t i = 0; i < c.size(); ++i) out.mutable_data()[i] = c.grid().at(i);
                               return out;
                             })
      .def_property_readonly("rgb", [](const Colormap& c) {
        F64 out({static_cast<py::ssize_t>(c.size()), py::ssize_t{3}});
        std::memcpy(out.mutable_data(), c.rgb().data(), c.size() * 3 * sizeof(double));
        return out;
      });

  m.def(
      "build_colormap",
      [](double n_ambient, double n_film, double n_substrate, double angle_deg, std::optional<double> monochromatic_nm,
         double grid_min_nm, double grid_step_nm, std::size_t grid_count) {
        const FilmStack s{n_ambient, n_film, n_substrate, angle_deg};
        const auto setup = monochromatic_nm ? SpectralSetup::monochromatic(*monochromatic_nm) : SpectralSetup::defaults();
        py::gil_scoped_release release;
        return build_colormap(s, setup, ThicknessGrid{grid_min_nm, grid_step_nm, grid_count});
      },
      py::arg("n_ambient") = 1.0, py::arg("n_film") = 1.337, py::arg("n_substrate") = 1.42,
      py::arg("angle_deg") = 0.0, py::arg("monochromatic_nm") = py::none(), py::arg("grid_min_nm") = 0.0,
      py::arg("grid_step_nm") = 1.0, py::arg("grid_count") = 5001);

  m.def(
      "gen_perlin",
      [](int width, int height, int octaves, double scale_px, double persistence, double lacunarity,
         std::uint64_t seed) {
        return from_field(gen_perlin(PerlinParams{persistence, lacunarity, octaves, scale_px, seed}, width, height));
      },
      py::arg("width"), py::arg("height"), py::arg("octaves") = 4, py::arg("scale_px") = 100.0,
      py::arg("persistence") = 0.5, py::arg("lacunarity") = 1.8, py::arg("seed") = 0);

  m.def(
      "gen_gaussian",
      [](int width, int height, int n_peaks, double sigma_min, double sigma_max, std::uint64_t seed) {
        return from_field(gen_gaussian(GaussianParams{n_peaks, sigma_min, sigma_max, seed}, width, height));
      },
      py::arg("width"), py::arg("height"), py::arg("n_peaks") = 100, py::arg("sigma_min") = 0.1,
      py::arg("sigma_max") = 0.5, py::arg("seed") = 0);

  m.def(
      "apply_range",
      [](const F64& unit, std::uint64_t seed, double abs_min_nm, double abs_max_nm, double span_min_nm,
         double span_max_nm) {
        return from_field(
            apply_range(to_field(unit), RangeConstraint{abs_min_nm, abs_max_nm, span_min_nm, span_max_nm}, seed));
      },
      py::arg("unit"), py::arg("seed"), py::arg("abs_min_nm") = 0.0, py::arg("abs_max_nm") = 4000.0,
      py::arg("span_min_nm") = 250.0, py::arg("span_max_nm") = 2500.0);

  m.def(
      "render", [](const F64& field, const Colormap& cm) { return from_image(render(to_field(field), cm)); },
      py::arg("field"), py::arg("colormap"));

  m.def(
      "add_gaussian_noise",
      [](const U8& image, double stddev, std::uint64_t seed) {
        Rng rng(seed);
        return from_image(add_gaussian_noise(to_image(image), stddev, rng));
      },
      py::arg("image"), py::arg("stddev"), py::arg("seed"));

  m.def(
      "reconstruct_naive",
      [](const U8& image, const Colormap& cm) {
        const auto img = to_image(image);
        ThicknessField out;
        {
          py::gil_scoped_release release;
          out = reconstruct_naive(img, cm);
        }
        return from_field(out);
      },
      py::arg("image"), py::arg("colormap"));

  m.def(
      "reconstruct_regularized",
      [](const U8& image, const Colormap& cm, int candidates, double smoothness_weight, int max_iters,
         int multiscale_levels, double scale_sigma, const std::optional<Bool>& mask) {
        const auto img = to_image(image);
        const auto vm = to_mask(mask);
        const ReconstructConfig cfg{candidates, smoothness_weight, max_iters, multiscale_levels, scale_sigma, 1};
        ReconstructResult r;
        {
          py::gil_scoped_release release;
          r = reconstruct_regularized(img, cm, cfg, vm ? &*vm : nullptr);
        }
        py::dict d;
        d["field"] = from_field(r.field);
        d["energy"] = r.energy;
        d["iterations"] = r.iterations;
        d["converged"] = r.converged;
        d["mean_nm"] = r.mean_nm;
        d["energy_trace"] = r.energy_trace;
        return d;
      },
      py::arg("image"), py::arg("colormap"), py::arg("candidates") = 32, py::arg("smoothness_weight") = 1e-4,
      py::arg("max_iters") = 100, py::arg("multiscale_levels") = 2, py::arg("scale_sigma") = 1.0,
      py::arg("mask") = py::none());

  m.def(
      "evaluate",
      [](const F64& pred, const F64& gt, const std::optional<Bool>& mask, double clamp_lo_um, double clamp_hi_um,
         double silog_lambda) {
        EvalOptions opts;
        opts.clamp_lo_um = clamp_lo_um;
        opts.clamp_hi_um = clamp_hi_um;
        opts.silog_lambda = silog_lambda;
        const auto vm = to_mask(mask);
        return report_dict(evaluate(to_field(pred), to_field(gt), vm ? &*vm : nullptr, opts));
      },
      py::arg("pred"), py::arg("gt"), py::arg("mask") = py::none(), py::arg("clamp_lo_um") = 0.0,
      py::arg("clamp_hi_um") = 5.0, py::arg("silog_lambda") = 0.85);

  m.def("family_counts", &family_counts, py::arg("total"), py::arg("fractions"));

  m.def(
      "generate_dataset",
      [](const std::string& spec_json, const std::filesystem::path& out_dir, int threads) {
        const auto spec = DatasetSpec::from_json(parse_json_text(spec_json, "dataset spec"));
        Manifest man;
        {
          py::gil_scoped_release release;
          man = generate(spec, out_dir, threads);
        }
        return json_to_py(man.to_json());
      },
      py::arg("spec_json"), py::arg("out_dir"), py::arg("threads") = 1);

  m.def(
      "load_dataset",
      [](const std::filesystem::path& dir) {
        py::list out;
        for (const auto& e : load(dir)) {
          py::dict d;
          d["id"] = e.id;
          d["parent_id"] = e.parent_id;
          d["family"] = to_string(e.family);
          d["image"] = from_image(e.image);
          d["field"] = from_field(e.field);
          d["mask"] = from_mask(e.mask);
          out.append(d);
        }
        return out;
      },
      py::arg("dir"));
}
