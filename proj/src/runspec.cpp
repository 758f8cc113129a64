#include "mckv/runspec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mckv/errors.hpp"

namespace mckv {

namespace {

using nlohmann::json;

constexpr std::array<std::pair<Command, std::string_view>, 7> kCommands{{
    {Command::simulate, "simulate"},
    {Command::entrance, "entrance"},
    {Command::fixed_point, "fixed_point"},
    {Command::lift_invariance, "lift_invariance"},
    {Command::qp_rep, "qp_rep"},
    {Command::check, "check"},
    {Command::bistable, "bistable"},
}};

struct ModelDefaults {
  std::string_view name;
  std::vector<std::pair<std::string, double>> params;
};

const std::vector<ModelDefaults>& model_table() {
  static const std::vector<ModelDefaults> table{
      {"ou", {{"theta", 1.0}, {"sigma", std::sqrt(2.0)}, {"dim", 1.0}}},
      {"meanfield_ou", {{"theta", 2.0}, {"coupling", 0.5}, {"sigma", 1.0}, {"dim", 1.0}}},
      {"linear_periodic", {{"theta", 1.0}, {"sigma", 1.0}}},
      {"curie_weiss", {{"beta", 1.0}, {"k", 1.0}, {"sigma", 1.0}}},
  };
  return table;
}

const ModelDefaults* find_model(const std::string& name) {
  for (const auto& m : model_table())
    if (m.name == name) return &m;
  return nullptr;
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

void only_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) throw ValidationError(path.empty() ? "<root>" : path, "must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ValidationError(path.empty() ? k : path + "." + k, "unknown field");
    }
  }
}

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ValidationError(path, "must be a number");
  return v.get<double>();
}

std::uint64_t get_unsigned(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ValidationError(path, "must be a non-negative integer");
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ValidationError(path, "must be true or false");
  return v.get<bool>();
}

std::vector<double> get_numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError(path, "must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ForcingSpec parse_forcing(const json& j, const std::string& path) {
  only_keys(j, path, {"constant", "terms"});
  ForcingSpec f;
  if (j.contains("constant")) f.constant = get_number(j["constant"], join(path, "constant"));
  if (j.contains("terms")) {
    const auto& terms = j["terms"];
    if (!terms.is_array()) throw ValidationError(join(path, "terms"), "must be an array");
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string tp = join(path, "terms") + "[" + std::to_string(i) + "]";
      only_keys(terms[i], tp, {"amplitude", "frequency", "phase", "cosine"});
      SinusoidTerm t;
      if (terms[i].contains("amplitude")) t.amplitude = get_number(terms[i]["amplitude"], tp + ".amplitude");
      if (terms[i].contains("frequency")) t.frequency = get_number(terms[i]["frequency"], tp + ".frequency");
      if (terms[i].contains("phase")) t.phase = get_number(terms[i]["phase"], tp + ".phase");
      if (terms[i].contains("cosine")) t.cosine = get_bool(terms[i]["cosine"], tp + ".cosine");
      f.terms.push_back(t);
    }
  }
  return f;
}

json forcing_json(const ForcingSpec& f) {
  json terms = json::array();
  for (const auto& t : f.terms) {
    terms.push_back({{"amplitude", t.amplitude}, {"frequency", t.frequency}, {"phase", t.phase}, {"cosine", t.cosine}});
  }
  return json{{"constant", f.constant}, {"terms", terms}};
}

RunSpec from_json(const json& j) {
  only_keys(j, "", {"command", "model", "sim", "window", "tol", "max_iter", "anchor", "output_dir", "emit_plots",
                    "lift", "bistable"});
  RunSpec s;
  if (!j.contains("command")) throw ValidationError("command", "missing");
  if (!j["command"].is_string()) throw ValidationError("command", "must be a string");
  s.command = parse_command(j["command"].get<std::string>());

  if (!j.contains("model")) throw ValidationError("model", "missing");
  const auto& m = j["model"];
  only_keys(m, "model", {"name", "params", "forcing"});
  if (!m.contains("name")) throw ValidationError("model.name", "missing");
  if (!m["name"].is_string()) throw ValidationError("model.name", "must be a string");
  s.model.name = m["name"].get<std::string>();
  if (m.contains("params")) {
    if (!m["params"].is_object()) throw ValidationError("model.params", "must be an object");
    for (const auto& [k, v] : m["params"].items()) s.model.params[k] = get_number(v, "model.params." + k);
  }
  if (m.contains("forcing")) {
    s.model.forcing = parse_forcing(m["forcing"], "model.forcing");
    s.model.forcing_set = true;
  }

  if (j.contains("sim")) {
    const auto& c = j["sim"];
    only_keys(c, "sim", {"n_particles", "dt", "seed", "n_canon", "record_stride", "tamed", "threads"});
    if (c.contains("n_particles")) s.sim.n_particles = get_unsigned(c["n_particles"], "sim.n_particles");
    if (c.contains("dt")) s.sim.dt = get_number(c["dt"], "sim.dt");
    if (c.contains("seed")) s.sim.seed = get_unsigned(c["seed"], "sim.seed");
    if (c.contains("n_canon")) s.sim.n_canon = get_unsigned(c["n_canon"], "sim.n_canon");
    if (c.contains("record_stride")) s.sim.record_stride = get_unsigned(c["record_stride"], "sim.record_stride");
    if (c.contains("tamed")) s.sim.tamed = get_bool(c["tamed"], "sim.tamed");
    if (c.contains("threads")) s.sim.threads = static_cast<int>(get_unsigned(c["threads"], "sim.threads"));
  }
  if (j.contains("window")) {
    const auto w = get_numbers(j["window"], "window");
    if (w.size() != 2) throw ValidationError("window", "must be [start, end]");
    s.window = {w[0], w[1]};
  }
  if (j.contains("tol")) s.tol = get_number(j["tol"], "tol");
  if (j.contains("max_iter")) s.max_iter = static_cast<int>(get_unsigned(j["max_iter"], "max_iter"));
  if (j.contains("anchor")) s.anchor = get_numbers(j["anchor"], "anchor");
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw ValidationError("output_dir", "must be a string");
    s.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("emit_plots")) s.emit_plots = get_bool(j["emit_plots"], "emit_plots");
  if (j.contains("lift")) {
    const auto& l = j["lift"];
    only_keys(l, "lift", {"horizon_periods", "base_grid", "times", "samples"});
    if (l.contains("horizon_periods")) s.lift.horizon_periods = get_number(l["horizon_periods"], "lift.horizon_periods");
    if (l.contains("base_grid")) s.lift.base_grid = get_unsigned(l["base_grid"], "lift.base_grid");
    if (l.contains("times")) s.lift.times = get_numbers(l["times"], "lift.times");
    if (l.contains("samples")) s.lift.samples = get_unsigned(l["samples"], "lift.samples");
  }
  if (j.contains("bistable")) {
    const auto& b = j["bistable"];
    only_keys(b, "bistable", {"anchors", "thetas"});
    if (b.contains("anchors")) s.bistable.anchors = get_numbers(b["anchors"], "bistable.anchors");
    if (b.contains("thetas")) s.bistable.thetas = get_numbers(b["thetas"], "bistable.thetas");
  }
  validate(s);
  return s;
}

double param(const ModelSpec& m, const std::string& key) {
  const auto it = m.params.find(key);
  if (it == m.params.end()) throw ValidationError("model.params." + key, "missing");
  return it->second;
}

std::size_t model_dim(const ModelSpec& m) {
  const auto it = m.params.find("dim");
  return it == m.params.end() ? 1 : static_cast<std::size_t>(it->second);
}

void positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(field, "must be positive");
}

}  // namespace

std::string_view command_name(Command c) {
  for (const auto& [k, n] : kCommands)
    if (k == c) return n;
  return "?";
}

Command parse_command(std::string_view name) {
  for (const auto& [k, n] : kCommands)
    if (n == name) return k;
  throw ValidationError("command", "unknown command '" + std::string(name) + "'");
}

void validate(RunSpec& s) {
  auto& m = s.model;
  if (m.name.empty()) throw ValidationError("model.name", "missing");
  const auto* def = find_model(m.name);
  if (def == nullptr) throw ValidationError("model.name", "unknown model '" + m.name + "'");
  for (const auto& [k, v] : m.params) {
    const bool known = std::any_of(def->params.begin(), def->params.end(), [&](const auto& p) { return p.first == k; });
    if (!known) throw ValidationError("model.params." + k, "not a parameter of " + m.name);
    if (!std::isfinite(v)) throw ValidationError("model.params." + k, "must be finite");
  }
  for (const auto& [k, v] : def->params) m.params.emplace(k, v);
  if (!m.forcing_set) {
    m.forcing = m.name == "linear_periodic" ? ForcingSpec::sine(1.0, 1.0) : ForcingSpec::none();
    m.forcing_set = true;
  }
  try {
    m.forcing.validate();
  } catch (const ConstructionError& e) {
    throw ValidationError("model.forcing", e.what());
  }
  if ((m.name == "ou" || m.name == "meanfield_ou") && !m.forcing.terms.empty()) {
    throw ValidationError("model.forcing", m.name + " takes no forcing");
  }
  if (m.params.count("dim")) {
    const double d = m.params["dim"];
    if (!(d >= 1.0) || d != std::floor(d) || d > 3.0) throw ValidationError("model.params.dim", "must be 1, 2 or 3");
  }
  if (m.params.count("theta")) positive(m.params["theta"], "model.params.theta");
  if (m.params.count("beta")) positive(m.params["beta"], "model.params.beta");
  if (m.params.count("k")) positive(m.params["k"], "model.params.k");
  if (param(m, "sigma") == 0.0) throw ValidationError("model.params.sigma", "must be nonzero");

  s.sim.validate();
  if (s.sim.threads < 0) throw ValidationError("sim.threads", "must be non-negative");
  if (!std::isfinite(s.window.start) || !(s.window.end > s.window.start)) {
    throw ValidationError("window", "must satisfy start < end");
  }
  for (auto [v, f] : {std::pair{s.window.start, "window[0]"}, std::pair{s.window.end, "window[1]"}}) {
    try {
      grid_step(v, s.sim.dt);
    } catch (const ConstructionError&) {
      throw ValidationError(f, "must be a multiple of sim.dt");
    }
  }
  positive(s.tol, "tol");
  if (s.max_iter < 1) throw ValidationError("max_iter", "must be at least 1");
  const std::size_t d = model_dim(m);
  if (s.anchor.empty()) s.anchor.assign(d, 0.0);
  if (s.anchor.size() != d) throw ValidationError("anchor", "must have one entry per dimension");
  if (s.output_dir.empty()) throw ValidationError("output_dir", "must not be empty");
  positive(s.lift.horizon_periods, "lift.horizon_periods");
  if (s.lift.base_grid < 1) throw ValidationError("lift.base_grid", "must be at least 1");
  if (s.lift.samples < 1) throw ValidationError("lift.samples", "must be at least 1");
  for (double t : s.lift.times)
    if (!(t >= 0.0)) throw ValidationError("lift.times", "must be non-negative");
  if (s.bistable.anchors.size() != 2) throw ValidationError("bistable.anchors", "needs exactly two anchors");
  if (s.bistable.thetas.empty()) s.bistable.thetas.assign(2, cw_theta_star());
  if (s.bistable.thetas.size() != 2) throw ValidationError("bistable.thetas", "needs exactly two radii");
  for (double t : s.bistable.thetas) positive(t, "bistable.thetas");
  if (s.command == Command::bistable && m.name != "curie_weiss") {
    throw ValidationError("model.name", "bistable runs need the curie_weiss model");
  }
  if ((s.command == Command::lift_invariance || s.command == Command::qp_rep) && m.forcing.terms.empty()) {
    throw ValidationError("model.forcing", "lift commands need a time-periodic forcing");
  }
}

RunSpec load_spec(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(line_of(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  return from_json(j);
}

RunSpec load_spec_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("spec", "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return load_spec(ss.str());
}

std::string emit_spec(const RunSpec& s, bool provenance) {
  json params = json::object();
  for (const auto& [k, v] : s.model.params) params[k] = v;
  json sim{{"n_particles", s.sim.n_particles}, {"dt", s.sim.dt},        {"seed", s.sim.seed},
           {"n_canon", s.sim.n_canon},         {"record_stride", s.sim.record_stride}, {"tamed", s.sim.tamed}};
  if (!provenance) sim["threads"] = s.sim.threads;
  json j{{"command", command_name(s.command)},
         {"model", {{"name", s.model.name}, {"params", params}, {"forcing", forcing_json(s.model.forcing)}}},
         {"sim", sim},
         {"window", {s.window.start, s.window.end}},
         {"tol", s.tol},
         {"max_iter", s.max_iter},
         {"anchor", s.anchor},
         {"emit_plots", s.emit_plots},
         {"lift",
          {{"horizon_periods", s.lift.horizon_periods},
           {"base_grid", s.lift.base_grid},
           {"times", s.lift.times},
           {"samples", s.lift.samples}}},
         {"bistable", {{"anchors", s.bistable.anchors}, {"thetas", s.bistable.thetas}}}};
  if (!provenance) j["output_dir"] = s.output_dir;
  return j.dump(2) + "\n";
}

CurieWeissParams curie_weiss_params(const ModelSpec& m) {
  if (m.name != "curie_weiss") throw ValidationError("model.name", "not a curie_weiss model");
  return {param(m, "beta"), param(m, "k"), param(m, "sigma"), m.forcing};
}

CoefficientModel build_model(const ModelSpec& m) {
  if (m.name == "ou") return make_ou(param(m, "theta"), param(m, "sigma"), model_dim(m));
  if (m.name == "meanfield_ou") {
    return make_meanfield_ou(param(m, "theta"), param(m, "coupling"), param(m, "sigma"), model_dim(m));
  }
  if (m.name == "linear_periodic") return make_linear_periodic(param(m, "theta"), param(m, "sigma"), m.forcing);
  if (m.name == "curie_weiss") return make_curie_weiss(curie_weiss_params(m));
  throw ValidationError("model.name", "unknown model '" + m.name + "'");
}

DissipativityProfile build_profile(const ModelSpec& m) {
  if (m.name == "ou") return profile_ou(param(m, "theta"), param(m, "sigma"), model_dim(m));
  if (m.name == "meanfield_ou") {
    return profile_meanfield_ou(param(m, "theta"), param(m, "coupling"), param(m, "sigma"), model_dim(m));
  }
  if (m.name == "linear_periodic") return profile_linear(param(m, "theta"), 0.0, param(m, "sigma"), m.forcing);
  if (m.name == "curie_weiss") return profile_curie_weiss(curie_weiss_params(m));
  throw ValidationError("model.name", "unknown model '" + m.name + "'");
}

}  // namespace mckv
