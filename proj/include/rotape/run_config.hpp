#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rotape/errors.hpp"
#include "rotape/grid.hpp"
#include "rotape/pe_solver.hpp"
#include "rotape/theory.hpp"

namespace rotape {

using json = nlohmann::json;

inline constexpr const char* kConfigSchema = "rotape-config/1";

struct RunConfig {
  GridSpec grid{16, 8};

  struct Physics {
    double nu = 0.1;
    double omega = 0.0;
  } physics;

  struct Time {
    double dt = 1e-3;
    double t_end = 0.0;
    std::string scheme = "rk4_if";
    std::string formulation = "rotating";
  } time;

  struct Init {
    std::string kind = "random_analytic";
    double tau0 = 0.3;
    double eta0 = 0.1;
    double amplitude = 1.0;
    double baroclinic_sobolev_target = 0.1;
    std::uint64_t seed = 1;
    std::string path;
  } init;

  struct Norms {
    double r = 2.5;
    int s = 0;
    double tau_report = 0.1;
  } norms;

  struct Scenario {
    std::string name = "evolve";
    std::vector<double> sweep;
    std::string sweep_param = "omega";
    double blowup_factor = 1e4;
    int samples = 0;  // 0 selects the scenario default
    std::vector<int> resolutions;
    std::vector<std::string> kinds;
    std::vector<double> epsilons;
    double threshold_fraction = 0.2;
    int trials = 50;
  } scenario;

  struct Output {
    std::string dir = "out";
    int snapshot_every = 0;
    bool csv = true;
  } output;

  TheoryConstants theory;

  void validate() const {
    try {
      grid.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
    if (!(physics.nu > 0.0)) throw ConfigError("physics.nu must be positive");
    if (!(time.dt > 0.0)) throw ConfigError("time.dt must be positive");
    if (!(time.t_end >= 0.0)) throw ConfigError("time.t_end must be nonnegative");
    if (time.scheme != "rk4_if" && time.scheme != "rk4_plain") throw ConfigError("time.scheme: " + time.scheme);
    if (time.formulation != "rotating" && time.formulation != "direct")
      throw ConfigError("time.formulation: " + time.formulation);
    static const std::set<std::string> kinds{"random_analytic", "well_prepared", "shear_plus_baroclinic", "file"};
    if (!kinds.count(init.kind)) throw ConfigError("init.kind: " + init.kind);
    if (init.kind == "file" && init.path.empty()) throw ConfigError("init.path is required for init.kind=file");
    if (grid.planar && init.kind != "random_analytic" && init.kind != "file")
      throw ConfigError("planar grids support init.kind random_analytic or file");
    if (!(init.tau0 >= 0.0) || !(init.eta0 >= 0.0)) throw ConfigError("init radii must be nonnegative");
    if (!(init.amplitude >= 0.0)) throw ConfigError("init.amplitude must be nonnegative");
    if (!(norms.r >= 0.0) || norms.s < 0 || norms.s > 2 || !(norms.tau_report >= 0.0))
      throw ConfigError("norms: need r >= 0, s in {0,1,2}, tau_report >= 0");
    if (scenario.sweep_param != "omega" && scenario.sweep_param != "amplitude")
      throw ConfigError("scenario.sweep_param: " + scenario.sweep_param);
    if (!(scenario.blowup_factor > 1.0)) throw ConfigError("scenario.blowup_factor must exceed 1");
    if (scenario.samples < 0 || scenario.trials < 0) throw ConfigError("scenario counts must be nonnegative");
    if (!(scenario.threshold_fraction > 0.0)) throw ConfigError("scenario.threshold_fraction must be positive");
    for (int n : scenario.resolutions)
      if (n < 4 || n % 2) throw ConfigError("scenario.resolutions must be even and >= 4");
    for (double e : scenario.epsilons)
      if (!(e > 0.0)) throw ConfigError("scenario.epsilons must be positive");
    if (output.snapshot_every < 0) throw ConfigError("output.snapshot_every must be nonnegative");
    try {
      theory.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("theory: ") + e.what());
    }
  }

  SolverConfig solver() const {
    SolverConfig c;
    c.grid = grid;
    c.nu = physics.nu;
    c.omega = physics.omega;
    c.dt = time.dt;
    c.t_end = time.t_end;
    c.scheme = time.scheme == "rk4_plain" ? Scheme::rk4_plain : Scheme::rk4_if;
    c.formulation = time.formulation == "direct" ? Formulation::direct : Formulation::rotating;
    return c;
  }
};

namespace config_detail {

// Reads keys from one JSON object and rejects any key it was not asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    const std::string where = name_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(where + " must be a boolean");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!it->is_number_unsigned()) throw ConfigError(where + " must be a nonnegative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError(where + " must be an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(where + " must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError(where + " must be a string");
    }
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown key: " + name_ + "." + item.key());
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace config_detail

inline RunConfig parse_config(const json& j) {
  using config_detail::Section;
  RunConfig c;
  Section top(j, "config");
  std::string schema;
  top.get("schema", schema);
  if (schema != kConfigSchema) throw ConfigError("schema must be \"" + std::string(kConfigSchema) + "\"");

  if (const json* s = top.sub("grid")) {
    Section g(*s, "grid");
    g.get("nh", c.grid.nh);
    g.get("nz", c.grid.nz);
    g.get("dealias", c.grid.dealias_fraction);
    g.get("planar", c.grid.planar);
    g.finish();
  }
  if (const json* s = top.sub("physics")) {
    Section p(*s, "physics");
    p.get("nu", c.physics.nu);
    p.get("omega", c.physics.omega);
    p.finish();
  }
  if (const json* s = top.sub("time")) {
    Section t(*s, "time");
    t.get("dt", c.time.dt);
    t.get("t_end", c.time.t_end);
    t.get("scheme", c.time.scheme);
    t.get("formulation", c.time.formulation);
    t.finish();
  }
  if (const json* s = top.sub("init")) {
    Section i(*s, "init");
    i.get("kind", c.init.kind);
    i.get("tau0", c.init.tau0);
    i.get("eta0", c.init.eta0);
    i.get("amplitude", c.init.amplitude);
    i.get("baroclinic_sobolev_target", c.init.baroclinic_sobolev_target);
    i.get("seed", c.init.seed);
    i.get("path", c.init.path);
    i.finish();
  }
  if (const json* s = top.sub("norms")) {
    Section n(*s, "norms");
    n.get("r", c.norms.r);
    n.get("s", c.norms.s);
    n.get("tau_report", c.norms.tau_report);
    n.finish();
  }
  if (const json* s = top.sub("scenario")) {
    Section n(*s, "scenario");
    n.get("name", c.scenario.name);
    n.get("sweep", c.scenario.sweep);
    n.get("sweep_param", c.scenario.sweep_param);
    n.get("blowup_factor", c.scenario.blowup_factor);
    n.get("samples", c.scenario.samples);
    n.get("resolutions", c.scenario.resolutions);
    n.get("kinds", c.scenario.kinds);
    n.get("epsilons", c.scenario.epsilons);
    n.get("threshold_fraction", c.scenario.threshold_fraction);
    n.get("trials", c.scenario.trials);
    n.finish();
  }
  if (const json* s = top.sub("output")) {
    Section o(*s, "output");
    o.get("dir", c.output.dir);
    o.get("snapshot_every", c.output.snapshot_every);
    o.get("csv", c.output.csv);
    o.finish();
  }
  if (const json* s = top.sub("theory")) {
    Section k(*s, "theory");
    k.get("c_r", c.theory.c_r);
    k.get("c_m", c.theory.c_m);
    k.get("c_r_a", c.theory.c_r_a);
    k.get("c_r_s", c.theory.c_r_s);
    k.get("c_main", c.theory.c_main);
    k.get("c_main_nu", c.theory.c_main_nu);
    k.get("c_small", c.theory.c_small);
    k.get("c_2d", c.theory.c_2d);
    k.finish();
  }
  top.finish();
  c.validate();
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline json to_json(const RunConfig& c) {
  json j;
  j["schema"] = kConfigSchema;
  j["grid"] = {{"nh", c.grid.nh}, {"nz", c.grid.nz}, {"dealias", c.grid.dealias_fraction}, {"planar", c.grid.planar}};
  j["physics"] = {{"nu", c.physics.nu}, {"omega", c.physics.omega}};
  j["time"] = {{"dt", c.time.dt},
               {"t_end", c.time.t_end},
               {"scheme", c.time.scheme},
               {"formulation", c.time.formulation}};
  j["init"] = {{"kind", c.init.kind},
               {"tau0", c.init.tau0},
               {"eta0", c.init.eta0},
               {"amplitude", c.init.amplitude},
               {"baroclinic_sobolev_target", c.init.baroclinic_sobolev_target},
               {"seed", c.init.seed},
               {"path", c.init.path}};
  j["norms"] = {{"r", c.norms.r}, {"s", c.norms.s}, {"tau_report", c.norms.tau_report}};
  j["scenario"] = {{"name", c.scenario.name},
                   {"sweep", c.scenario.sweep},
                   {"sweep_param", c.scenario.sweep_param},
                   {"blowup_factor", c.scenario.blowup_factor},
                   {"samples", c.scenario.samples},
                   {"resolutions", c.scenario.resolutions},
                   {"kinds", c.scenario.kinds},
                   {"epsilons", c.scenario.epsilons},
                   {"threshold_fraction", c.scenario.threshold_fraction},
                   {"trials", c.scenario.trials}};
  j["output"] = {{"dir", c.output.dir}, {"snapshot_every", c.output.snapshot_every}, {"csv", c.output.csv}};
  j["theory"] = {{"c_r", c.theory.c_r},         {"c_m", c.theory.c_m},
                 {"c_r_a", c.theory.c_r_a},     {"c_r_s", c.theory.c_r_s},
                 {"c_main", c.theory.c_main},   {"c_main_nu", c.theory.c_main_nu},
                 {"c_small", c.theory.c_small}, {"c_2d", c.theory.c_2d}};
  return j;
}

}  // namespace rotape
