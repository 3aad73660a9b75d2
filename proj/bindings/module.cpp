#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <map>
#include <optional>

#include "relcont/scenes.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

relcont::Scene configure(const std::string& name, std::optional<std::uint64_t> seed,
                         std::optional<int> grid, const std::map<std::string, double>& params,
                         const std::map<std::string, double>& tolerances) {
  auto s = relcont::make_scene(name);
  if (seed) s.seed = *seed;
  if (grid) {
    if (*grid < 1) throw relcont::ConfigError("grid must be positive");
    s.grid = *grid;
  }
  for (const auto& [k, v] : params) s.set_param(k, v);
  for (const auto& [k, v] : tolerances) {
    if (!(v > 0)) throw relcont::ConfigError("tolerance '" + k + "' must be positive");
    s.tol_override[k] = v;
  }
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "residual checks for relativistic continuum mechanics";

  py::register_exception<relcont::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<relcont::StateError>(m, "StateError", PyExc_RuntimeError);

  m.def("list_scenes", &relcont::scene_names, "Names of the registered scenes, alphabetized.");

  m.def(
      "scene_description",
      [](const std::string& name) { return relcont::make_scene(name).description; },
      py::arg("name"));

  m.def(
      "scene_parameters",
      [](const std::string& name) { return relcont::make_scene(name).params; },
      py::arg("name"), "Adjustable parameters of a scene with their defaults.");

  m.def(
      "list_checks",
      [](const std::string& name) {
        auto checks = relcont::scene_checks(relcont::make_scene(name));
        std::sort(checks.begin(), checks.end(),
                  [](const auto& a, const auto& b) { return a.name < b.name; });
        std::vector<std::map<std::string, std::string>> out;
        for (const auto& c : checks)
          out.push_back({{"name", c.name}, {"anchor", c.anchor}, {"description", c.description}});
        return out;
      },
      py::arg("name"), "Checks a scene ships: name, anchor, one-line description.");

  m.def(
      "run_scene_json",
      [](const std::string& name, const std::string& only, std::optional<std::uint64_t> seed,
         std::optional<int> grid, const std::map<std::string, double>& params,
         const std::map<std::string, double>& tolerances) {
        auto s = configure(name, seed, grid, params, tolerances);
        py::gil_scoped_release release;
        return relcont::report_json(relcont::run_suite(s, only));
      },
      py::arg("name"), py::arg("only") = "*", py::arg("seed") = py::none(),
      py::arg("grid") = py::none(), py::arg("params") = std::map<std::string, double>{},
      py::arg("tolerances") = std::map<std::string, double>{},
      "Run the selected checks and return the report as a JSON string.");

  m.def(
      "star_action_terms",
      [](double radius, double energy_density, double mass_scale, int nodes) {
        auto star = relcont::make_star(radius, energy_density);
        auto terms = relcont::total_action_terms(
            relcont::star_spacetime(star, mass_scale, 3.0, 0.1, 0.9, nodes));
        return std::map<std::string, double>{
            {"matter_minus", terms.matter_minus}, {"matter_plus", terms.matter_plus},
            {"eh_minus", terms.eh_minus},         {"eh_plus", terms.eh_plus},
            {"ghy_minus", terms.ghy_minus},       {"ghy_plus", terms.ghy_plus},
            {"total", terms.total()}};
      },
      py::arg("radius") = 1.0, py::arg("energy_density") = 0.05, py::arg("mass_scale") = 1.0,
      py::arg("nodes") = 6,
      "Matter, gravity, and boundary contributions to the matched-star action.");

  m.def(
      "moving_domain_gap",
      [](std::uint64_t seed) {
        auto g = relcont::moving_domain_gap(seed);
        return py::dict("lhs"_a = g.lhs, "rhs"_a = g.rhs, "gap"_a = g.gap);
      },
      py::arg("seed"),
      "Both sides of the moving-domain transport identity and their relative gap.");
}
