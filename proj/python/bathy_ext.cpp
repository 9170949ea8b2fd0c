// Python bindings. Clouds cross the boundary as (n, 3) float64 arrays and
// sample sets as (n, 4) arrays of x, y, z0, z.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bathy/error.hpp"
#include "bathy/evaluation.hpp"
#include "bathy/pairing.hpp"
#include "bathy/refraction_sim.hpp"
#include "bathy/svr.hpp"

namespace py = pybind11;
using namespace bathy;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

PointCloud to_cloud(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw InputError("expected an (n, 3) array of x, y, z");
  const auto r = a.unchecked<2>();
  PointCloud c;
  c.points.reserve(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) c.points.push_back({r(i, 0), r(i, 1), r(i, 2)});
  return c;
}

Array to_array(const PointCloud& c) {
  Array a({static_cast<py::ssize_t>(c.size()), py::ssize_t{3}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto k = static_cast<py::ssize_t>(i);
    w(k, 0) = c[i].x;
    w(k, 1) = c[i].y;
    w(k, 2) = c[i].z;
  }
  return a;
}

SampleSet to_samples(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 4) throw InputError("expected an (n, 4) array of x, y, z0, z");
  const auto r = a.unchecked<2>();
  SampleSet s;
  for (py::ssize_t i = 0; i < r.shape(0); ++i)
    s.samples.push_back({r(i, 0), r(i, 1), r(i, 2), r(i, 3)});
  s.provenance.input = s.provenance.retained = s.size();
  return s;
}

Array samples_array(const SampleSet& s) {
  Array a({static_cast<py::ssize_t>(s.size()), py::ssize_t{4}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto k = static_cast<py::ssize_t>(i);
    const auto& d = s.samples[i];
    w(k, 0) = d.x;
    w(k, 1) = d.y;
    w(k, 2) = d.z0;
    w(k, 3) = d.z;
  }
  return a;
}

py::dict provenance_dict(const Provenance& p) {
  py::dict d;
  d["input"] = p.input;
  d["retained"] = p.retained;
  d["removed_rule_a"] = p.removed_rule_a;
  d["removed_rule_b"] = p.removed_rule_b;
  d["removed_unmatched"] = p.removed_unmatched;
  d["sources"] = p.sources;
  d["steps"] = p.steps;
  return d;
}

py::dict stats_dict(const DistanceStats& s) {
  py::dict d;
  d["count"] = s.count;
  d["gaussian_mean"] = s.gaussian_mean;
  d["rmse"] = s.rmse;
  d["stddev"] = s.stddev;
  return d;
}

HeightField seabed_from(const std::string& preset, const SeabedDomain& domain, double a, double b) {
  if (preset == "slope") return slope_seabed(domain, a, b);
  if (preset == "flat") return flat_seabed(a);
  throw ConfigError("unknown seabed preset '" + preset + "' (slope | flat)");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Refraction correction of through-water photogrammetric point clouds";

  auto config_error = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  auto input_error = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  auto numerical_error =
      py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<VersionError>(m, "VersionError", input_error.ptr());
  py::register_exception<DegenerateDesign>(m, "DegenerateDesign", numerical_error.ptr());
  (void)config_error;

  py::class_<SampleSet>(m, "SampleSet")
      .def(py::init([](const Array& a) { return to_samples(a); }), py::arg("array"))
      .def_property_readonly("array", &samples_array)
      .def_property_readonly("provenance", [](const SampleSet& s) { return provenance_dict(s.provenance); })
      .def("__len__", &SampleSet::size);

  py::class_<SvrModel>(m, "Model")
      .def_readonly("w", &SvrModel::w)
      .def_readonly("b", &SvrModel::b)
      .def_property_readonly("kind", [](const SvrModel& s) {
        return s.kind == ModelKind::kSvr ? "svr" : "least_squares";
      })
      .def_property_readonly("c", [](const SvrModel& s) { return s.hyperparams.c; })
      .def_property_readonly("epsilon", [](const SvrModel& s) { return s.hyperparams.epsilon; })
      .def_property_readonly("objective", [](const SvrModel& s) { return s.summary.objective; })
      .def_property_readonly("iterations", [](const SvrModel& s) { return s.summary.iterations; })
      .def_property_readonly("converged", [](const SvrModel& s) { return s.summary.converged; })
      .def_property_readonly("warnings", [](const SvrModel& s) { return s.summary.warnings; })
      .def("predict",
           [](const SvrModel& model, const Array& z0) {
             Array out(z0.request().shape);
             const double* in = z0.data();
             double* o = out.mutable_data();
             for (py::ssize_t i = 0; i < z0.size(); ++i) o[i] = predict(model, in[i]);
             return out;
           },
           py::arg("z0"))
      .def("save", [](const SvrModel& model, const std::filesystem::path& p) { save_model(model, p); })
      .def("__repr__", [](const SvrModel& s) {
        return "<Model w=" + std::to_string(s.w) + " b=" + std::to_string(s.b) + ">";
      });

  m.def("load_model", &load_model, py::arg("path"));
  m.def("read_cloud", [](const std::filesystem::path& p) { return to_array(read_cloud(p)); },
        py::arg("path"));
  m.def("write_cloud",
        [](const Array& a, const std::filesystem::path& p) { write_cloud(to_cloud(a), p); },
        py::arg("points"), py::arg("path"));

  m.def("simulate",
        [](const std::string& preset, double depth_start, double depth_end, std::size_t points,
           std::uint64_t seed, double refractive_index, double camera_height,
           double camera_spacing, double sigma_z, double outlier_rate) {
          SimScene s;
          s.refractive_index = refractive_index;
          s.cameras = camera_grid(s.domain, camera_height, camera_spacing);
          s.seabed = seabed_from(preset, s.domain, depth_start, depth_end);
          auto r = simulate_scene(s, points, seed);
          if (sigma_z > 0.0 || outlier_rate > 0.0) r = add_noise(r, sigma_z, outlier_rate, seed);
          return py::make_tuple(to_array(r.true_cloud), to_array(r.apparent_cloud));
        },
        py::arg("preset") = "slope", py::arg("depth_start") = 1.0, py::arg("depth_end") = 14.8,
        py::arg("points") = 50000, py::arg("seed") = 42,
        py::arg("refractive_index") = kSeawaterIndex, py::arg("camera_height") = 100.0,
        py::arg("camera_spacing") = 5.0, py::arg("sigma_z") = 0.0, py::arg("outlier_rate") = 0.0,
        "Returns (true_cloud, apparent_cloud). For preset='flat' depth_start is the depth.");

  m.def("pair",
        [](const Array& image, const Array& reference, double max_radius, bool literal_rule_a) {
          FilterRules rules;
          if (literal_rule_a) rules.rule_a = RuleADirection::kLiteral;
          return filter_samples(reduce_to_reference(to_cloud(image), to_cloud(reference), max_radius),
                                rules);
        },
        py::arg("image"), py::arg("reference"), py::arg("max_radius") = 1.0,
        py::arg("literal_rule_a") = false);
  m.def("filter_samples", [](const SampleSet& s) { return filter_samples(s); }, py::arg("samples"));
  m.def("split_samples", &split_samples, py::arg("samples"), py::arg("fraction"), py::arg("seed"));

  m.def("fit_svr",
        [](const SampleSet& s, double c, double epsilon, double tol, long max_iter, bool standardize) {
          return fit_svr(s, {c, epsilon, tol, max_iter, standardize});
        },
        py::arg("samples"), py::arg("c") = 1.0, py::arg("epsilon") = 0.0, py::arg("tol") = 1e-9,
        py::arg("max_iter") = 100000, py::arg("standardize") = false);
  m.def("fit_least_squares", &fit_least_squares, py::arg("samples"));
  m.def("correct_cloud",
        [](const SvrModel& model, const Array& a) { return to_array(correct_cloud(model, to_cloud(a))); },
        py::arg("model"), py::arg("points"));

  m.def("m3c2_distance",
        [](const Array& reference, const Array& compared, std::optional<Array> core,
           const std::string& normal_mode, double normal_scale, double projection_scale,
           double max_depth) {
          M3c2Params p;
          if (normal_mode == "estimated") p.normal_mode = NormalMode::kEstimated;
          else if (normal_mode != "vertical") throw ConfigError("normal_mode must be vertical or estimated");
          p.normal_scale = normal_scale;
          p.projection_scale = projection_scale;
          p.max_depth = max_depth;
          const auto ref = to_cloud(reference);
          const auto r = m3c2_distance(ref, to_cloud(compared), p, core ? to_cloud(*core) : ref);
          py::array_t<double> dist(static_cast<py::ssize_t>(r.points.size()));
          auto d = dist.mutable_unchecked<1>();
          for (std::size_t i = 0; i < r.points.size(); ++i)
            d(static_cast<py::ssize_t>(i)) = r.points[i].valid() ? r.points[i].distance
                                                                 : std::numeric_limits<double>::quiet_NaN();
          py::dict out;
          out["distance"] = dist;
          out["invalid_count"] = r.invalid_count;
          out["stats"] = r.stats ? py::object(stats_dict(*r.stats)) : py::none();
          return out;
        },
        py::arg("reference"), py::arg("compared"), py::arg("core") = py::none(),
        py::arg("normal_mode") = "vertical", py::arg("normal_scale") = 5.0,
        py::arg("projection_scale") = 2.0, py::arg("max_depth") = 20.0,
        "Signed distances (NaN where invalid) plus summary statistics.");

  m.def("fitting_score",
        [](const Array& t, const Array& p) {
          return fitting_score(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())),
                               std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
        },
        py::arg("z_true"), py::arg("z_predicted"));

  m.def("extract_section",
        [](const std::vector<Array>& clouds, const std::vector<std::pair<double, double>>& polyline,
           double half_width, double station_step) {
          std::vector<PointCloud> cs;
          for (const auto& c : clouds) cs.push_back(to_cloud(c));
          const auto prof = extract_section(cs, polyline, half_width, station_step);
          const auto rows = static_cast<py::ssize_t>(prof.stations.size());
          const auto cols = static_cast<py::ssize_t>(cs.size() + 1);
          Array out({rows, cols});
          auto w = out.mutable_unchecked<2>();
          for (py::ssize_t i = 0; i < rows; ++i) {
            const auto& st = prof.stations[static_cast<std::size_t>(i)];
            w(i, 0) = st.chainage;
            for (py::ssize_t k = 1; k < cols; ++k) {
              const auto& z = st.z[static_cast<std::size_t>(k - 1)];
              w(i, k) = z ? *z : std::numeric_limits<double>::quiet_NaN();
            }
          }
          return out;
        },
        py::arg("clouds"), py::arg("polyline"), py::arg("half_width") = 1.0,
        py::arg("station_step") = 2.0,
        "Rows of (chainage, z per cloud); NaN marks an absent station.");
}
