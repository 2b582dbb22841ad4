#include "fsplate/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace fsplate::cfg {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

struct Setter {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

double to_double(const std::string& v, const std::string& key) {
  try {
    size_t pos;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (...) {
    throw ConfigError("config: bad numeric value '" + v + "' for key " + key);
  }
}

long to_long(const std::string& v, const std::string& key) {
  try {
    size_t pos;
    long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (...) {
    throw ConfigError("config: bad integer value '" + v + "' for key " + key);
  }
}

std::string fmt(double d) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

const std::map<std::string, Setter>& table() {
  static const std::map<std::string, Setter> t = {
      {"geometry.dim", {[](RunConfig& c, const std::string& v) { c.dim = (int)to_long(v, "geometry.dim"); },
                        [](const RunConfig& c) { return std::to_string(c.dim); }}},
      {"geometry.L1", {[](RunConfig& c, const std::string& v) { c.L1 = to_double(v, "geometry.L1"); },
                       [](const RunConfig& c) { return fmt(c.L1); }}},
      {"geometry.n_modes", {[](RunConfig& c, const std::string& v) { c.n_modes = (int)to_long(v, "geometry.n_modes"); },
                            [](const RunConfig& c) { return std::to_string(c.n_modes); }}},
      {"geometry.n_vertical", {[](RunConfig& c, const std::string& v) { c.n_vertical = (int)to_long(v, "geometry.n_vertical"); },
                               [](const RunConfig& c) { return std::to_string(c.n_vertical); }}},
      {"physics.nu", {[](RunConfig& c, const std::string& v) { c.nu = to_double(v, "physics.nu"); },
                      [](const RunConfig& c) { return fmt(c.nu); }}},
      {"physics.alpha", {[](RunConfig& c, const std::string& v) { c.alpha = to_double(v, "physics.alpha"); },
                         [](const RunConfig& c) { return fmt(c.alpha); }}},
      {"physics.delta", {[](RunConfig& c, const std::string& v) { c.delta = to_double(v, "physics.delta"); },
                         [](const RunConfig& c) { return fmt(c.delta); }}},
      {"physics.beta1", {[](RunConfig& c, const std::string& v) { c.beta1 = to_double(v, "physics.beta1"); },
                         [](const RunConfig& c) { return fmt(c.beta1); }}},
      {"physics.beta2", {[](RunConfig& c, const std::string& v) { c.beta2 = to_double(v, "physics.beta2"); },
                         [](const RunConfig& c) { return fmt(c.beta2); }}},
      {"stationary.fS", {[](RunConfig& c, const std::string& v) { c.fS = v; },
                         [](const RunConfig& c) { return c.fS; }}},
      {"stationary.hS", {[](RunConfig& c, const std::string& v) { c.hS = v; },
                         [](const RunConfig& c) { return c.hS; }}},
      {"control.gamma", {[](RunConfig& c, const std::string& v) { c.gamma = to_double(v, "control.gamma"); },
                         [](const RunConfig& c) { return fmt(c.gamma); }}},
      {"control.t0", {[](RunConfig& c, const std::string& v) { c.t0 = to_double(v, "control.t0"); },
                      [](const RunConfig& c) { return fmt(c.t0); }}},
      {"control.margin_factor", {[](RunConfig& c, const std::string& v) { c.margin_factor = to_double(v, "control.margin_factor"); },
                                 [](const RunConfig& c) { return fmt(c.margin_factor); }}},
      {"control.tol_rel", {[](RunConfig& c, const std::string& v) { c.tol_rel = to_double(v, "control.tol_rel"); },
                           [](const RunConfig& c) { return fmt(c.tol_rel); }}},
      {"control.shape", {[](RunConfig& c, const std::string& v) { c.shape = v; },
                         [](const RunConfig& c) { return c.shape; }}},
      {"simulation.T", {[](RunConfig& c, const std::string& v) { c.T = to_double(v, "simulation.T"); },
                        [](const RunConfig& c) { return fmt(c.T); }}},
      {"simulation.dt", {[](RunConfig& c, const std::string& v) { c.dt = to_double(v, "simulation.dt"); },
                         [](const RunConfig& c) { return fmt(c.dt); }}},
      {"simulation.R", {[](RunConfig& c, const std::string& v) { c.R = to_double(v, "simulation.R"); },
                        [](const RunConfig& c) { return fmt(c.R); }}},
      {"simulation.picard_tol", {[](RunConfig& c, const std::string& v) { c.picard_tol = to_double(v, "simulation.picard_tol"); },
                                 [](const RunConfig& c) { return fmt(c.picard_tol); }}},
      {"simulation.interp", {[](RunConfig& c, const std::string& v) { c.interp = v; },
                             [](const RunConfig& c) { return c.interp; }}},
      {"spectrum.count", {[](RunConfig& c, const std::string& v) { c.count = (int)to_long(v, "spectrum.count"); },
                          [](const RunConfig& c) { return std::to_string(c.count); }}},
      {"output.dir", {[](RunConfig& c, const std::string& v) { c.out_dir = v; },
                      [](const RunConfig& c) { return c.out_dir; }}},
      {"output.seed", {[](RunConfig& c, const std::string& v) { c.seed = (unsigned long)to_long(v, "output.seed"); },
                       [](const RunConfig& c) { return std::to_string(c.seed); }}},
  };
  return t;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto it = table().find(key);
  if (it == table().end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second.set(cfg, value);
}

}  // namespace

std::map<std::string, std::string> RunConfig::as_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, s] : table()) out[k] = s.get(*this);
  // where artifacts land is not part of the experiment identity
  out.erase("output.dir");
  return out;
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  for (const auto& [k, v] : as_map()) os << k << " = " << v << "\n";
  return os.str();
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[' && s.back() == ']') {
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("config: expected key = value, got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    set_key(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

RunConfig parse_config_json(const std::string& text) {
  RunConfig cfg;
  nlohmann::json j = nlohmann::json::parse(text);
  std::function<void(const std::string&, const nlohmann::json&)> walk =
      [&](const std::string& prefix, const nlohmann::json& node) {
        for (auto it = node.begin(); it != node.end(); ++it) {
          std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
          if (it->is_object()) {
            walk(key, *it);
          } else if (it->is_string()) {
            set_key(cfg, key, it->get<std::string>());
          } else {
            std::ostringstream os;
            os << *it;
            set_key(cfg, key, os.str());
          }
        }
      };
  walk("", j);
  validate(cfg);
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
    return parse_config_json(ss.str());
  return parse_config(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& keyval) {
  auto eq = keyval.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must be key=value, got '" + keyval + "'");
  set_key(cfg, trim(keyval.substr(0, eq)), trim(keyval.substr(eq + 1)));
  validate(cfg);
}

void validate(const RunConfig& cfg) {
  if (cfg.dim != 2) throw ConfigError("config: geometry.dim must be 2 for assembled runs");
  if (cfg.L1 <= 0) throw ConfigError("config: geometry.L1 must be positive");
  if (cfg.n_modes < 4 || cfg.n_modes % 2 != 0)
    throw ConfigError("config: geometry.n_modes must be even and >= 4");
  if (cfg.n_vertical < 4) throw ConfigError("config: geometry.n_vertical must be >= 4");
  if (cfg.nu <= 0 || cfg.alpha <= 0 || cfg.delta < 0)
    throw ConfigError("config: physics coefficients out of range");
  if (cfg.beta1 < 0 || cfg.beta2 < 0) throw ConfigError("config: frictions must be >= 0");
  if (cfg.gamma <= 0 || cfg.t0 < 0) throw ConfigError("config: control.gamma/t0 out of range");
  if (cfg.dt <= 0 || cfg.T <= 0) throw ConfigError("config: simulation.T/dt must be positive");
  if (cfg.shape != "cos4" && cfg.shape != "zero")
    throw ConfigError("config: control.shape must be cos4 or zero");
  if (cfg.interp != "cubic" && cfg.interp != "linear")
    throw ConfigError("config: simulation.interp must be cubic or linear");
}

}  // namespace fsplate::cfg
