#include "pjmp/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pjmp/error.hpp"

namespace pjmp {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, path + ": " + what);
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
      fail(path + "." + item.key(), "unknown field");
    }
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

std::uint64_t unsigned_int(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    fail(path, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

template <class T, class Read>
void optional(const json& obj, const char* key, const std::string& path, T& dst, Read read) {
  if (const json* v = find(obj, key)) dst = read(*v, path + "." + key);
}

const json& required(const json& obj, const char* key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) fail(path + "." + key, "missing required field");
  return *v;
}

IntensitySpec parse_intensity(const json& j, const std::string& path) {
  expect_object(j, path);
  IntensitySpec s;
  const std::string family = string(required(j, "family", path), path + ".family");
  s.declared_delta = number(required(j, "delta", path), path + ".delta");
  s.declared_c = number(required(j, "c", path), path + ".c");
  if (family == "affine") {
    reject_unknown(j, path, {"family", "delta", "c", "floor", "slope"});
    s.family = IntensitySpec::Family::Affine;
    s.floor = number(required(j, "floor", path), path + ".floor");
    optional(j, "slope", path, s.slope, number);
  } else if (family == "table") {
    reject_unknown(j, path, {"family", "delta", "c", "breakpoints", "values"});
    s.family = IntensitySpec::Family::Table;
    s.breakpoints = numbers(required(j, "breakpoints", path), path + ".breakpoints");
    s.values = numbers(required(j, "values", path), path + ".values");
    if (s.breakpoints.size() != s.values.size() || s.breakpoints.empty()) {
      fail(path + ".values", "breakpoints and values must be non-empty and of equal length");
    }
    if (!std::is_sorted(s.breakpoints.begin(), s.breakpoints.end()) ||
        std::adjacent_find(s.breakpoints.begin(), s.breakpoints.end()) != s.breakpoints.end()) {
      fail(path + ".breakpoints", "breakpoints must be strictly increasing");
    }
  } else {
    fail(path + ".family", "expected \"affine\" or \"table\"");
  }
  return s;
}

ModelConfig parse_model(const json& j, const std::string& path) {
  expect_object(j, path);
  reject_unknown(j, path, {"n_neurons", "weights", "intensity", "ceiling", "clip_rule", "potential_quantum"});
  ModelConfig m;
  m.n_neurons = unsigned_int(required(j, "n_neurons", path), path + ".n_neurons");
  if (m.n_neurons == 0) fail(path + ".n_neurons", "must be positive");
  const json& w = required(j, "weights", path);
  if (!w.is_array() || w.size() != m.n_neurons) {
    fail(path + ".weights", "expected " + std::to_string(m.n_neurons) + " rows");
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    const std::string row_path = path + ".weights[" + std::to_string(i) + "]";
    auto row = numbers(w[i], row_path);
    if (row.size() != m.n_neurons) fail(row_path, "expected " + std::to_string(m.n_neurons) + " entries");
    m.weights.push_back(std::move(row));
  }
  m.intensity = parse_intensity(required(j, "intensity", path), path + ".intensity");
  m.ceiling = number(required(j, "ceiling", path), path + ".ceiling");
  if (const json* c = find(j, "clip_rule")) {
    const std::string rule = string(*c, path + ".clip_rule");
    if (rule == "receiver") {
      m.clip_rule = ClipRule::Receiver;
    } else if (rule == "sender") {
      m.clip_rule = ClipRule::Sender;
    } else {
      fail(path + ".clip_rule", "expected \"receiver\" or \"sender\"");
    }
  }
  optional(j, "potential_quantum", path, m.potential_quantum, number);
  if (!(m.potential_quantum > 0.0)) fail(path + ".potential_quantum", "must be positive");
  return m;
}

void positive_times(const std::vector<double>& ts, const std::string& path) {
  for (std::size_t k = 0; k < ts.size(); ++k) {
    if (!(ts[k] > 0.0)) fail(path + "[" + std::to_string(k) + "]", "times must be > 0");
  }
}

TimeSpec parse_times(const json& j, const std::string& path) {
  TimeSpec t;
  if (j.is_array()) {
    t.list = numbers(j, path);
    if (t.list.empty()) fail(path, "at least one time is required");
    positive_times(t.list, path);
    return t;
  }
  expect_object(j, path);
  const json& g = required(j, "log_grid", path);
  const std::string gp = path + ".log_grid";
  expect_object(g, gp);
  reject_unknown(g, gp, {"min", "max", "points"});
  t.log_grid = true;
  t.min = number(required(g, "min", gp), gp + ".min");
  t.max = number(required(g, "max", gp), gp + ".max");
  t.points = unsigned_int(required(g, "points", gp), gp + ".points");
  if (!(t.min > 0.0)) fail(gp + ".min", "times must be > 0");
  if (!(t.max >= t.min)) fail(gp + ".max", "must be >= min");
  if (t.points == 0) fail(gp + ".points", "must be positive");
  return t;
}

ObservableSpec parse_observable(const json& j, const std::string& path, const std::string& base_dir) {
  expect_object(j, path);
  ObservableSpec o;
  o.type = string(required(j, "type", path), path + ".type");
  if (o.type == "random") {
    reject_unknown(j, path, {"type", "count", "seed"});
    optional(j, "count", path, o.count, unsigned_int);
    optional(j, "seed", path, o.seed, unsigned_int);
  } else if (o.type == "coordinate") {
    reject_unknown(j, path, {"type", "neuron"});
    o.neuron = unsigned_int(required(j, "neuron", path), path + ".neuron");
  } else if (o.type == "indicator") {
    reject_unknown(j, path, {"type", "state"});
    o.state = numbers(required(j, "state", path), path + ".state");
  } else if (o.type == "file") {
    reject_unknown(j, path, {"type", "path"});
    o.path = string(required(j, "path", path), path + ".path");
    const std::filesystem::path p = std::filesystem::path(base_dir) / o.path;
    if (!std::filesystem::exists(p)) fail(path + ".path", "file not found: " + p.string());
  } else if (o.type == "eigenfunction") {
    reject_unknown(j, path, {"type"});
  } else {
    fail(path + ".type", "expected random, coordinate, indicator, file or eigenfunction");
  }
  return o;
}

EngineConfig parse_engine(const json& j, const std::string& path) {
  expect_object(j, path);
  reject_unknown(j, path, {"expm_tol", "solve_tol", "dense_limit", "max_states", "points_per_decade", "theta_points",
                           "per_neuron_sup", "identity_tol"});
  EngineConfig e;
  optional(j, "expm_tol", path, e.expm_tol, number);
  optional(j, "solve_tol", path, e.solve_tol, number);
  optional(j, "dense_limit", path, e.dense_limit, unsigned_int);
  optional(j, "max_states", path, e.max_states, unsigned_int);
  optional(j, "points_per_decade", path, e.points_per_decade, unsigned_int);
  optional(j, "theta_points", path, e.theta_points, unsigned_int);
  optional(j, "identity_tol", path, e.identity_tol, number);
  if (const json* v = find(j, "per_neuron_sup")) {
    if (!v->is_boolean()) fail(path + ".per_neuron_sup", "expected a boolean");
    e.per_neuron_sup = v->get<bool>();
  }
  if (!(e.expm_tol > 0.0 && e.expm_tol <= 1e-6)) fail(path + ".expm_tol", "must lie in (0, 1e-6]");
  if (!(e.solve_tol > 0.0)) fail(path + ".solve_tol", "must be positive");
  if (!(e.identity_tol > 0.0)) fail(path + ".identity_tol", "must be positive");
  if (e.points_per_decade == 0) fail(path + ".points_per_decade", "must be positive");
  if (e.theta_points < 2) fail(path + ".theta_points", "must be at least 2");
  if (e.max_states == 0) fail(path + ".max_states", "must be positive");
  return e;
}

}  // namespace

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"theorem_general", "theorem_recurrent", "corollaries",
                                              "invariant", "identities", "montecarlo_crosscheck"};
  return names;
}

std::vector<double> TimeSpec::values() const {
  if (!log_grid) return list;
  std::vector<double> out;
  if (points == 1) return {min};
  for (std::size_t k = 0; k < points; ++k) {
    out.push_back(min * std::pow(max / min, static_cast<double>(k) / static_cast<double>(points - 1)));
  }
  return out;
}

RunConfig parse_config(const json& doc, const std::string& base_dir) {
  const std::string root = "$";
  expect_object(doc, root);
  reject_unknown(doc, root, {"schema", "model", "initial_state", "times", "observables", "checks", "engine", "mc", "output"});
  const json& schema = required(doc, "schema", root);
  if (!schema.is_number_integer() || schema.get<int>() != kConfigSchema) {
    fail("$.schema", "unsupported schema version (expected 1)");
  }
  RunConfig c;
  c.base_dir = base_dir;
  c.model = parse_model(required(doc, "model", root), "$.model");
  c.initial_state = numbers(required(doc, "initial_state", root), "$.initial_state");
  if (c.initial_state.size() != c.model.n_neurons) {
    fail("$.initial_state", "expected " + std::to_string(c.model.n_neurons) + " entries");
  }
  c.times = parse_times(required(doc, "times", root), "$.times");

  if (const json* obs = find(doc, "observables")) {
    if (!obs->is_array()) fail("$.observables", "expected an array");
    for (std::size_t k = 0; k < obs->size(); ++k) {
      c.observables.push_back(parse_observable((*obs)[k], "$.observables[" + std::to_string(k) + "]", base_dir));
    }
  } else {
    c.observables.push_back({"random", 10, 0, 0, {}, {}});
  }

  if (const json* checks = find(doc, "checks")) {
    if (!checks->is_array()) fail("$.checks", "expected an array of check names");
    for (std::size_t k = 0; k < checks->size(); ++k) {
      const std::string p = "$.checks[" + std::to_string(k) + "]";
      const std::string name = string((*checks)[k], p);
      const auto& known = known_checks();
      if (std::find(known.begin(), known.end(), name) == known.end()) fail(p, "unknown check \"" + name + "\"");
      if (std::find(c.checks.begin(), c.checks.end(), name) == c.checks.end()) c.checks.push_back(name);
    }
  } else {
    c.checks = {"theorem_general", "theorem_recurrent", "corollaries", "invariant", "identities"};
  }

  if (const json* e = find(doc, "engine")) c.engine = parse_engine(*e, "$.engine");
  if (const json* mc = find(doc, "mc")) {
    expect_object(*mc, "$.mc");
    reject_unknown(*mc, "$.mc", {"n_paths", "seed", "times"});
    optional(*mc, "n_paths", "$.mc", c.mc.n_paths, unsigned_int);
    optional(*mc, "seed", "$.mc", c.mc.seed, unsigned_int);
    optional(*mc, "times", "$.mc", c.mc.times, numbers);
    if (c.mc.n_paths < 2) fail("$.mc.n_paths", "must be at least 2");
    positive_times(c.mc.times, "$.mc.times");
  }
  if (const json* out = find(doc, "output")) {
    expect_object(*out, "$.output");
    reject_unknown(*out, "$.output", {"directory", "formats"});
    optional(*out, "directory", "$.output", c.output.directory, string);
    if (const json* f = find(*out, "formats")) {
      if (!f->is_array() || f->empty()) fail("$.output.formats", "expected a non-empty array");
      c.output.formats.clear();
      for (std::size_t k = 0; k < f->size(); ++k) {
        const std::string p = "$.output.formats[" + std::to_string(k) + "]";
        const std::string name = string((*f)[k], p);
        if (name != "json" && name != "csv") fail(p, "expected \"json\" or \"csv\"");
        c.output.formats.push_back(name);
      }
    }
  }
  return c;
}

RunConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc, base_dir);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("$", "cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config_text(buf.str(), dir.empty() ? "." : dir.string());
}

json to_json(const RunConfig& c) {
  json model;
  model["n_neurons"] = c.model.n_neurons;
  model["weights"] = c.model.weights;
  json phi;
  const IntensitySpec& s = c.model.intensity;
  if (s.family == IntensitySpec::Family::Affine) {
    phi["family"] = "affine";
    phi["floor"] = s.floor;
    phi["slope"] = s.slope;
  } else {
    phi["family"] = "table";
    phi["breakpoints"] = s.breakpoints;
    phi["values"] = s.values;
  }
  phi["delta"] = s.declared_delta;
  phi["c"] = s.declared_c;
  model["intensity"] = phi;
  model["ceiling"] = c.model.ceiling;
  model["clip_rule"] = to_string(c.model.clip_rule);
  model["potential_quantum"] = c.model.potential_quantum;

  json doc;
  doc["schema"] = kConfigSchema;
  doc["model"] = model;
  doc["initial_state"] = c.initial_state;
  if (c.times.log_grid) {
    doc["times"] = {{"log_grid", {{"min", c.times.min}, {"max", c.times.max}, {"points", c.times.points}}}};
  } else {
    doc["times"] = c.times.list;
  }
  json obs = json::array();
  for (const ObservableSpec& o : c.observables) {
    json j;
    j["type"] = o.type;
    if (o.type == "random") {
      j["count"] = o.count;
      j["seed"] = o.seed;
    } else if (o.type == "coordinate") {
      j["neuron"] = o.neuron;
    } else if (o.type == "indicator") {
      j["state"] = o.state;
    } else if (o.type == "file") {
      j["path"] = o.path;
    }
    obs.push_back(j);
  }
  doc["observables"] = obs;
  doc["checks"] = c.checks;
  doc["engine"] = {{"expm_tol", c.engine.expm_tol},
                   {"solve_tol", c.engine.solve_tol},
                   {"dense_limit", c.engine.dense_limit},
                   {"max_states", c.engine.max_states},
                   {"points_per_decade", c.engine.points_per_decade},
                   {"theta_points", c.engine.theta_points},
                   {"per_neuron_sup", c.engine.per_neuron_sup},
                   {"identity_tol", c.engine.identity_tol}};
  doc["mc"] = {{"n_paths", c.mc.n_paths}, {"seed", c.mc.seed}, {"times", c.mc.times}};
  doc["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
  return doc;
}

std::vector<double> load_observable_file(const RunConfig& config, const ObservableSpec& spec) {
  const std::filesystem::path p = std::filesystem::path(config.base_dir) / spec.path;
  std::ifstream in(p);
  if (!in) fail("observable file", "cannot read " + p.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(p.string(), std::string("invalid JSON: ") + e.what());
  }
  return numbers(doc, p.string());
}

}  // namespace pjmp
