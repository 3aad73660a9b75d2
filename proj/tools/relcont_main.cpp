// relcont: run verification scenes and emit residual reports.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relcont/scenes.hpp"

namespace {

using relcont::ConfigError;
using relcont::Report;
using relcont::Scene;

struct Options {
  std::string scene;
  std::string scene_file;
  std::string only = "*";
  std::string out;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  std::vector<std::string> tols;
  std::vector<std::string> sets;
};

std::pair<std::string, double> parse_assignment(const std::string& text, const char* flag) {
  auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(std::string(flag) + " expects name=value, got '" + text + "'");
  std::string key = text.substr(0, eq);
  std::string val = text.substr(eq + 1);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(val, &used);
  } catch (const std::exception&) {
    throw ConfigError(std::string(flag) + " value '" + val + "' is not a number");
  }
  if (used != val.size())
    throw ConfigError(std::string(flag) + " value '" + val + "' is not a number");
  return {key, v};
}

Scene load_scene(const Options& o) {
  if (!o.scene.empty() && !o.scene_file.empty())
    throw ConfigError("--scene and --scene-file are mutually exclusive");

  Scene s;
  if (!o.scene_file.empty()) {
    std::ifstream in(o.scene_file);
    if (!in) throw ConfigError("cannot open scene file '" + o.scene_file + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
      throw ConfigError("scene file '" + o.scene_file + "': " + e.what());
    }
    if (!j.is_object() || !j.contains("scene"))
      throw ConfigError("scene file must be an object with a 'scene' key");
    for (const auto& [key, _] : j.items())
      if (key != "scene" && key != "seed" && key != "grid" && key != "params" && key != "tol")
        throw ConfigError("scene file: unknown key '" + key + "'");
    s = relcont::make_scene(j["scene"].get<std::string>());
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("grid")) {
      int g = j["grid"].get<int>();
      if (g < 1) throw ConfigError("scene file: grid must be positive");
      s.grid = g;
    }
    if (j.contains("params"))
      for (const auto& [key, val] : j["params"].items()) s.set_param(key, val.get<double>());
    if (j.contains("tol"))
      for (const auto& [key, val] : j["tol"].items()) {
        double t = val.get<double>();
        if (!(t > 0)) throw ConfigError("scene file: tolerance '" + key + "' must be positive");
        s.tol_override[key] = t;
      }
  } else if (!o.scene.empty()) {
    s = relcont::make_scene(o.scene);
  } else {
    throw ConfigError("a scene is required (--scene <name> or --scene-file <path>)");
  }

  if (o.seed) s.seed = *o.seed;
  if (o.grid) {
    if (*o.grid < 1) throw ConfigError("--grid must be positive");
    s.grid = *o.grid;
  }
  for (const auto& text : o.sets) {
    auto [key, v] = parse_assignment(text, "--set");
    s.set_param(key, v);
  }
  for (const auto& text : o.tols) {
    auto [key, v] = parse_assignment(text, "--tol");
    if (!(v > 0)) throw ConfigError("--tol " + key + " must be positive");
    s.tol_override[key] = v;
  }
  return s;
}

void emit(const std::string& payload, const Options& o) {
  if (o.out.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw ConfigError("cannot write to '" + o.out + "'");
  f << payload;
}

void emit_report(const Report& rep, const Options& o) {
  emit(o.format == "text" ? relcont::report_text(rep) : relcont::report_json(rep), o);
}

void add_scene_flags(CLI::App* cmd, Options& o, bool with_selection) {
  cmd->add_option("--scene", o.scene, "scene name (see list-scenes)");
  cmd->add_option("--scene-file", o.scene_file, "JSON scene file: {scene, seed, grid, params, tol}");
  cmd->add_option("--seed", o.seed, "random stream seed");
  cmd->add_option("--grid", o.grid, "probe points per axis");
  cmd->add_option("--set", o.sets, "override a scene parameter, name=value")->take_all();
  if (with_selection) {
    cmd->add_option("--only", o.only, "run checks whose name matches this glob");
    cmd->add_option("--tol", o.tols, "override a check tolerance, name=value")->take_all();
    cmd->add_option("--out", o.out, "write the report here instead of stdout");
    cmd->add_option("--format", o.format, "report format")
        ->check(CLI::IsMember({"json", "text"}));
  }
}

int run_check(const Options& o) {
  Scene s = load_scene(o);
  std::cerr << "scene " << s.name << ": running checks matching '" << o.only << "'\n";
  Report rep = relcont::run_suite(s, o.only);
  emit_report(rep, o);
  return rep.all_pass() ? 0 : 1;
}

int run_list_scenes() {
  for (const auto& name : relcont::scene_names())
    std::cout << name << "  " << relcont::make_scene(name).description << "\n";
  return 0;
}

int run_list_checks(const Options& o) {
  Scene s = load_scene(o);
  auto checks = relcont::scene_checks(s);
  std::sort(checks.begin(), checks.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  for (const auto& c : checks)
    std::cout << c.name << "  [" << c.anchor << "]  " << c.description << "\n";
  return 0;
}

int run_vary_ghy(Options o) {
  if (o.scene.empty() && o.scene_file.empty()) o.scene = "euclidean_sphere";
  Scene s = load_scene(o);
  std::cerr << "scene " << s.name << ": comparing boundary-term variations\n";
  Report rep = relcont::run_suite(s, "ghy-*");
  if (rep.checks.empty())
    throw ConfigError("scene '" + s.name + "' ships no ghy-* checks; try euclidean_sphere");
  emit_report(rep, o);
  return rep.all_pass() ? 0 : 1;
}

int run_action(const Options& o) {
  Scene s = load_scene(o);
  relcont::MatchedSpacetime m = [&]() {
    if (s.name == "constant_density_star") {
      auto star = relcont::make_star(s.param("radius"), s.param("energy_density"));
      return relcont::star_spacetime(star, s.param("exterior_mass_scale"),
                                     s.param("outer_radius"), s.param("time_lo"),
                                     s.param("time_hi"), int(s.param("nodes")));
    }
    if (s.name == "minkowski_dust") return relcont::flat_matched_dust(s.param("rho_bar"));
    throw ConfigError("scene '" + s.name +
                      "' has no matched spacetime; try constant_density_star or minkowski_dust");
  }();
  std::cerr << "scene " << s.name << ": assembling the total action\n";
  auto terms = relcont::total_action_terms(m);
  if (o.format == "text") {
    std::ostringstream os;
    os << "scene: " << s.name << "\n"
       << "  matter interior:  " << terms.matter_minus << "\n"
       << "  matter exterior:  " << terms.matter_plus << "\n"
       << "  gravity interior: " << terms.eh_minus << "\n"
       << "  gravity exterior: " << terms.eh_plus << "\n"
       << "  boundary interior: " << terms.ghy_minus << "\n"
       << "  boundary exterior: " << terms.ghy_plus << "\n"
       << "  total: " << terms.total() << "\n";
    emit(os.str(), o);
  } else {
    nlohmann::ordered_json j;
    j["scene"] = s.name;
    j["terms"] = {{"matter_minus", terms.matter_minus}, {"matter_plus", terms.matter_plus},
                  {"eh_minus", terms.eh_minus},         {"eh_plus", terms.eh_plus},
                  {"ghy_minus", terms.ghy_minus},       {"ghy_plus", terms.ghy_plus}};
    j["total"] = terms.total();
    emit(j.dump(2) + "\n", o);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational verifier for relativistic continuum mechanics"};
  app.require_subcommand(1);
  Options o;

  auto* check = app.add_subcommand("check", "run a scene's checks and emit the report");
  add_scene_flags(check, o, true);
  auto* lscenes = app.add_subcommand("list-scenes", "list available scenes");
  auto* lchecks = app.add_subcommand("list-checks", "list the checks a scene ships");
  add_scene_flags(lchecks, o, false);
  auto* vghy = app.add_subcommand("vary-ghy", "compare boundary-term variations with oracles");
  add_scene_flags(vghy, o, true);
  auto* action = app.add_subcommand("action", "assemble the total action of a matched spacetime");
  add_scene_flags(action, o, true);

  try {
    app.parse(argc, argv);
    if (check->parsed()) return run_check(o);
    if (lscenes->parsed()) return run_list_scenes();
    if (lchecks->parsed()) return run_list_checks(o);
    if (vghy->parsed()) return run_vary_ghy(o);
    if (action->parsed()) return run_action(o);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
