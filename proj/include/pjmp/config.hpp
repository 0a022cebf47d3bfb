#pragma once

// Run configuration: JSON with a top-level "schema": 1. Errors carry the
// JSON path of the offending field.

#include <cstddef>
#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "pjmp/model.hpp"

namespace pjmp {

constexpr int kConfigSchema = 1;

struct TimeSpec {
  // either an explicit list or a log grid
  std::vector<double> list;
  bool log_grid = false;
  double min = 0.0;
  double max = 0.0;
  std::size_t points = 0;

  std::vector<double> values() const;
};

struct ObservableSpec {
  std::string type;  // random | coordinate | indicator | file | eigenfunction
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::size_t neuron = 0;
  std::vector<double> state;
  std::string path;
};

struct EngineConfig {
  double expm_tol = 1e-12;
  double solve_tol = 1e-10;
  std::size_t dense_limit = 2000;
  std::size_t max_states = 200000;
  std::size_t points_per_decade = 64;
  std::size_t theta_points = 256;
  bool per_neuron_sup = false;
  double identity_tol = 1e-7;
};

struct McConfig {
  std::size_t n_paths = 100000;
  std::uint64_t seed = 0;
  std::vector<double> times;  // empty: use the run times
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"json"};
};

struct RunConfig {
  ModelConfig model;
  std::vector<double> initial_state;
  TimeSpec times;
  std::vector<ObservableSpec> observables;
  std::vector<std::string> checks;
  EngineConfig engine;
  McConfig mc;
  OutputConfig output;
  // directory that relative observable files resolve against; not serialized
  std::string base_dir = ".";
};

const std::vector<std::string>& known_checks();

/// Throws Error{ConfigError} with a "path: message" text.
RunConfig parse_config(const nlohmann::ordered_json& doc, const std::string& base_dir = ".");
RunConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Canonical form with every default filled in.
nlohmann::ordered_json to_json(const RunConfig& config);

/// Values of a "file" observable: a JSON array, one entry per enumerated state.
std::vector<double> load_observable_file(const RunConfig& config, const ObservableSpec& spec);

}  // namespace pjmp
