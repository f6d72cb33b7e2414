#pragma once

// Run configuration: a JSON document (comments allowed). Every key is
// optional; missing keys take the defaults below, unknown keys are rejected.

#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sropinf/models.hpp"
#include "sropinf/opinf.hpp"
#include "sropinf/pipeline.hpp"
#include "sropinf/rom.hpp"

namespace sropinf {

struct Window {
  double start = 0.0;
  double end = 0.0;
};

struct RunConfig {
  // model
  std::string model = "kse";
  double nu = 4.0 / 87.0;
  double speed = 1.0;        // advection-diffusion a
  double diffusivity = 1.0;  // advection-diffusion kappa
  // grid
  double length = 2.0 * std::numbers::pi;
  int n_modes = 20;
  int n_grid = 40;
  // fom
  double fom_dt = 1e-3;
  TimeScheme scheme = TimeScheme::rk3_cn;
  double sample_interval = 0.01;
  VelocityMode velocity = VelocityMode::exact;
  std::vector<FourierTerm> initial_condition = beating_wave_initial_terms();
  Window train_window{120.0, 130.0};
  Window test_window{30.0, 40.0};
  // template
  FourierTerm template_term{1, false, 1.0};
  // rom
  int n = 4;
  bool reproject = true;
  bool naive_speed = false;
  TrainingConfig training;
  IntegratorConfig integrator;
  std::vector<int> sweep_dims{4, 5, 6, 7, 8};
  // paths
  std::string output = "out";
  unsigned long seed = 0;

  Grid grid() const { return Grid(length, n_modes, n_grid); }

  QuadraticPde pde() const {
    if (model == "kse") return kse(grid(), nu);
    if (model == "advection_diffusion") return advection_diffusion(grid(), speed, diffusivity);
    throw ConfigError("unknown model '" + model + "' (expected kse or advection_diffusion)");
  }

  Template make_template() const { return Template(field_from_terms(grid(), {template_term})); }
  Field initial_field() const { return field_from_terms(grid(), initial_condition); }

  double horizon() const { return std::max(train_window.end, test_window.end); }
  double record_start() const { return std::min(train_window.start, test_window.start); }

  FomConfig fom() const {
    FomConfig f;
    f.dt = fom_dt;
    f.t_final = horizon();
    f.record_interval = sample_interval;
    f.record_start = record_start();
    f.velocity = velocity;
    f.scheme = scheme;
    return f;
  }

  ExperimentSettings experiment() const {
    ExperimentSettings s;
    s.n = n;
    s.reproject = reproject;
    s.naive_speed = naive_speed;
    s.training = training;
    s.integrator = integrator;
    s.fom_dt = fom_dt;
    s.scheme = scheme;
    s.reprojection_velocity = velocity;
    return s;
  }

  void validate() const {
    try {
      (void)grid();
      (void)pde();
      fom().validate();
    } catch (const DimensionError& e) {
      throw ConfigError(e.what());
    }
    training.validate();
    integrator.validate();
    if (n < 1) throw ConfigError("rom.n must be at least 1");
    for (const Window* w : {&train_window, &test_window}) {
      if (!(w->end > w->start) || w->start < 0.0)
        throw ConfigError("windows need 0 <= start < end");
    }
    for (const auto& t : initial_condition)
      if (t.wavenumber < 0 || t.wavenumber > n_modes)
        throw ConfigError("initial condition wavenumber " + std::to_string(t.wavenumber) +
                          " outside 0.." + std::to_string(n_modes));
    if (template_term.wavenumber < 1 || template_term.wavenumber > n_modes)
      throw ConfigError("template wavenumber must lie in 1..n_modes");
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::string& where,
                           const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + where + "." + key + "'");
}

template <class T>
void read_key(const nlohmann::json& obj, const char* key, T& value, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    value = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
  }
}

inline Window read_window(const nlohmann::json& obj, const char* key, Window w,
                          const std::string& where) {
  if (!obj.contains(key)) return w;
  const auto& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError("'" + where + "." + key + "' must be [start, end]");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline FourierTerm read_term(const nlohmann::json& t, const std::string& where) {
  reject_unknown(t, where, {"k", "kind", "amplitude"});
  FourierTerm term;
  read_key(t, "k", term.wavenumber, where);
  std::string kind = "cos";
  read_key(t, "kind", kind, where);
  if (kind != "cos" && kind != "sin") throw ConfigError("'" + where + ".kind' must be cos or sin");
  term.is_sine = kind == "sin";
  read_key(t, "amplitude", term.amplitude, where);
  return term;
}

template <class E>
E read_enum(const nlohmann::json& obj, const char* key, E current, const std::string& where,
            const std::vector<std::pair<std::string, E>>& names) {
  if (!obj.contains(key)) return current;
  std::string s;
  read_key(obj, key, s, where);
  for (const auto& [name, value] : names)
    if (name == s) return value;
  std::string options;
  for (const auto& [name, _] : names) options += (options.empty() ? "" : ", ") + name;
  throw ConfigError("'" + where + "." + key + "' must be one of: " + options);
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  using detail::read_enum;
  using detail::read_key;
  RunConfig c;
  detail::reject_unknown(j, "config", {"model", "grid", "fom", "template", "rom", "paths", "seed"});
  read_key(j, "seed", c.seed, "config");

  if (j.contains("model")) {
    const auto& m = j["model"];
    detail::reject_unknown(m, "model", {"name", "nu", "speed", "diffusivity"});
    read_key(m, "name", c.model, "model");
    read_key(m, "nu", c.nu, "model");
    read_key(m, "speed", c.speed, "model");
    read_key(m, "diffusivity", c.diffusivity, "model");
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    detail::reject_unknown(g, "grid", {"length", "n_modes", "n_grid"});
    read_key(g, "length", c.length, "grid");
    read_key(g, "n_modes", c.n_modes, "grid");
    read_key(g, "n_grid", c.n_grid, "grid");
  }
  if (j.contains("fom")) {
    const auto& f = j["fom"];
    detail::reject_unknown(f, "fom", {"dt", "scheme", "sample_interval", "velocity",
                                      "initial_condition", "train_window", "test_window"});
    read_key(f, "dt", c.fom_dt, "fom");
    read_key(f, "sample_interval", c.sample_interval, "fom");
    c.scheme = read_enum(f, "scheme", c.scheme, "fom",
                         {{"rk3_cn", TimeScheme::rk3_cn}, {"ars343", TimeScheme::ars343}});
    c.velocity = read_enum(f, "velocity", c.velocity, "fom",
                           {{"exact", VelocityMode::exact},
                            {"forward_difference", VelocityMode::forward_difference}});
    if (f.contains("initial_condition")) {
      if (!f["initial_condition"].is_array())
        throw ConfigError("'fom.initial_condition' must be a list of terms");
      c.initial_condition.clear();
      for (const auto& t : f["initial_condition"])
        c.initial_condition.push_back(detail::read_term(t, "fom.initial_condition[]"));
    }
    c.train_window = detail::read_window(f, "train_window", c.train_window, "fom");
    c.test_window = detail::read_window(f, "test_window", c.test_window, "fom");
  }
  if (j.contains("template")) c.template_term = detail::read_term(j["template"], "template");
  if (j.contains("rom")) {
    const auto& r = j["rom"];
    detail::reject_unknown(r, "rom", {"n", "lambda", "regularizer", "regularization_weight",
                                      "reproject", "speed_model", "speed_residual",
                                      "preconditioner", "cg_max_iters", "cg_rel_residual",
                                      "integrator", "sweep_dims"});
    read_key(r, "n", c.n, "rom");
    read_key(r, "lambda", c.training.lambda, "rom");
    read_key(r, "regularization_weight", c.training.regularization_weight, "rom");
    read_key(r, "reproject", c.reproject, "rom");
    read_key(r, "cg_max_iters", c.training.cg_max_iters, "rom");
    read_key(r, "cg_rel_residual", c.training.cg_rel_residual, "rom");
    read_key(r, "sweep_dims", c.sweep_dims, "rom");
    c.training.regularizer =
        read_enum(r, "regularizer", c.training.regularizer, "rom",
                  {{"none", Regularizer::none}, {"tikhonov", Regularizer::tikhonov}});
    c.training.speed_residual =
        read_enum(r, "speed_residual", c.training.speed_residual, "rom",
                  {{"projected", SpeedResidual::projected}, {"direct", SpeedResidual::direct}});
    c.training.preconditioner =
        read_enum(r, "preconditioner", c.training.preconditioner, "rom",
                  {{"gram", CgPreconditioner::gram}, {"diagonal", CgPreconditioner::diagonal}});
    c.naive_speed = read_enum(r, "speed_model", c.naive_speed, "rom",
                              {{"rational", false}, {"naive", true}});
    if (r.contains("integrator")) {
      const auto& i = r["integrator"];
      detail::reject_unknown(i, "rom.integrator", {"initial_step", "tolerance", "min_step",
                                                   "max_step", "accumulation"});
      read_key(i, "initial_step", c.integrator.initial_step, "rom.integrator");
      read_key(i, "tolerance", c.integrator.tolerance, "rom.integrator");
      read_key(i, "min_step", c.integrator.min_step, "rom.integrator");
      if (i.contains("max_step") && i["max_step"] == "inf")
        c.integrator.max_step = std::numeric_limits<double>::infinity();
      else
        read_key(i, "max_step", c.integrator.max_step, "rom.integrator");
      c.integrator.accumulation =
          read_enum(i, "accumulation", c.integrator.accumulation, "rom.integrator",
                    {{"per_step", ShiftAccumulation::per_step},
                     {"per_sample", ShiftAccumulation::per_sample}});
    }
  }
  if (j.contains("paths")) {
    detail::reject_unknown(j["paths"], "paths", {"output"});
    read_key(j["paths"], "output", c.output, "paths");
  }
  c.integrator.sample_interval = c.sample_interval;
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Every resolved parameter, for run manifests.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json ic = nlohmann::json::array();
  for (const auto& t : c.initial_condition)
    ic.push_back({{"k", t.wavenumber}, {"kind", t.is_sine ? "sin" : "cos"}, {"amplitude", t.amplitude}});
  const auto& tr = c.training;
  const auto& in = c.integrator;
  return {
      {"seed", c.seed},
      {"model", {{"name", c.model}, {"nu", c.nu}, {"speed", c.speed}, {"diffusivity", c.diffusivity}}},
      {"grid", {{"length", c.length}, {"n_modes", c.n_modes}, {"n_grid", c.n_grid}}},
      {"fom",
       {{"dt", c.fom_dt},
        {"scheme", c.scheme == TimeScheme::rk3_cn ? "rk3_cn" : "ars343"},
        {"sample_interval", c.sample_interval},
        {"velocity", c.velocity == VelocityMode::exact ? "exact" : "forward_difference"},
        {"initial_condition", ic},
        {"train_window", {c.train_window.start, c.train_window.end}},
        {"test_window", {c.test_window.start, c.test_window.end}}}},
      {"template",
       {{"k", c.template_term.wavenumber},
        {"kind", c.template_term.is_sine ? "sin" : "cos"},
        {"amplitude", c.template_term.amplitude}}},
      {"rom",
       {{"n", c.n},
        {"lambda", tr.lambda},
        {"regularizer", tr.regularizer == Regularizer::none ? "none" : "tikhonov"},
        {"regularization_weight", tr.regularization_weight},
        {"reproject", c.reproject},
        {"speed_model", c.naive_speed ? "naive" : "rational"},
        {"speed_residual", tr.speed_residual == SpeedResidual::projected ? "projected" : "direct"},
        {"preconditioner", tr.preconditioner == CgPreconditioner::gram ? "gram" : "diagonal"},
        {"cg_max_iters", tr.cg_max_iters},
        {"cg_rel_residual", tr.cg_rel_residual},
        {"integrator",
         {{"initial_step", in.initial_step},
          {"tolerance", in.tolerance},
          {"min_step", in.min_step},
          {"max_step", std::isfinite(in.max_step) ? nlohmann::json(in.max_step) : nlohmann::json("inf")},
          {"accumulation", in.accumulation == ShiftAccumulation::per_step ? "per_step" : "per_sample"}}},
        {"sweep_dims", c.sweep_dims}}},
      {"paths", {{"output", c.output}}},
  };
}

}  // namespace sropinf
