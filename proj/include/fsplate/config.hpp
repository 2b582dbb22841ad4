#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

// Flat key=value run configuration with dotted sections; JSON accepted as an
// alternative front end. Unknown keys are rejected.
namespace fsplate::cfg {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
  // geometry
  int dim = 2;
  double L1 = 1.0;
  int n_modes = 16;
  int n_vertical = 24;
  // physics
  double nu = 0.1, alpha = 1.0, delta = 0.5, beta1 = 0.1, beta2 = 0.1;
  // stationary forcing: "zero" or "sine:amp=..,k=.." (horizontal body force)
  std::string fS = "zero";
  std::string hS = "zero";
  // control
  double gamma = 2.0, t0 = 0.1;
  double margin_factor = 0.2;
  double tol_rel = 1e-6;
  std::string shape = "cos4";
  // simulation
  double T = 10.0, dt = 0.0125;
  double R = 1e-3;
  double picard_tol = 1e-9;
  std::string interp = "cubic";
  // spectrum
  int count = 20;
  // output
  std::string out_dir = "out";
  unsigned long seed = 1;

  std::map<std::string, std::string> as_map() const;
  std::string canonical() const;  // deterministic key=value dump
};

RunConfig parse_config(const std::string& text);        // key = value lines
RunConfig parse_config_json(const std::string& text);   // JSON object
RunConfig load_config_file(const std::string& path);    // dispatch on extension
void apply_override(RunConfig& cfg, const std::string& keyval);
void validate(const RunConfig& cfg);

}  // namespace fsplate::cfg
