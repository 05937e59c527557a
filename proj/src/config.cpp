#include "phm/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phm/errors.hpp"

namespace phm {

namespace {

using nlohmann::json;

// Reads the members of one JSON object, rejecting anything not explicitly consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) { return j_.at(key); }

  double number(const std::string& key, double lo, double hi, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi) throw ConfigError(where(key) + ": " + range(lo, hi));
    return x;
  }

  int integer(const std::string& key, long lo, long hi, int fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    long long x = v.get<long long>();
    if (x < lo || x > hi) throw ConfigError(where(key) + ": " + range(lo, hi));
    return static_cast<int>(x);
  }

  std::string text(const std::string& key, const std::vector<std::string>& allowed, std::string fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    std::string s = v.get<std::string>();
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end())
      throw ConfigError(where(key) + ": unknown value '" + s + "'");
    return s;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  static std::string range(double lo, double hi) {
    std::ostringstream os;
    os << "out of range [" << lo << ", " << hi << "]";
    return os.str();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> number_list(const json& v, const std::string& where, std::size_t min_len, std::size_t max_len,
                                double lo, double hi) {
  if (!v.is_array() || v.size() < min_len || v.size() > max_len)
    throw ConfigError(where + ": expected a list of " + std::to_string(min_len) + ".." + std::to_string(max_len) +
                      " numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw ConfigError(where + ": expected numbers");
    double x = e.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi) throw ConfigError(where + ": entry out of range");
    out.push_back(x);
  }
  return out;
}

std::vector<int> int_list(const json& v, const std::string& where, std::size_t min_len, std::size_t max_len, int lo,
                          int hi) {
  if (!v.is_array() || v.size() < min_len || v.size() > max_len)
    throw ConfigError(where + ": expected a list of " + std::to_string(min_len) + ".." + std::to_string(max_len) +
                      " integers");
  std::vector<int> out;
  for (const json& e : v) {
    if (!e.is_number_integer()) throw ConfigError(where + ": expected integers");
    long long x = e.get<long long>();
    if (x < lo || x > hi) throw ConfigError(where + ": entry out of range");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

const std::vector<std::string> kSystems{"cat", "skew", "slowprod"};
const std::vector<std::string> kPotentials{"zero", "constant", "geometric", "trig", "grid"};

void parse_system(const json& v, RunConfig& cfg) {
  if (v.is_string()) {
    std::string id = v.get<std::string>();
    if (std::find(kSystems.begin(), kSystems.end(), id) == kSystems.end())
      throw ConfigError("system: unknown system id '" + id + "'");
    cfg.system.id = id;
    return;
  }
  Section s(v, "system");
  SystemOptions& o = cfg.system;
  if (!s.has("id")) throw ConfigError("system.id: missing");
  o.id = s.text("id", kSystems, o.id);
  if (s.has("matrix")) {
    const json& m = s.raw("matrix");
    if (!m.is_array() || m.size() != 2) throw ConfigError("system.matrix: expected a 2x2 integer matrix");
    IntMatrix a;
    for (const json& row : m) {
      std::vector<int> r = int_list(row, "system.matrix", 2, 2, -1000, 1000);
      a.push_back({r[0], r[1]});
    }
    o.matrix = a;
  }
  o.alpha = s.number("alpha", -1e6, 1e6, o.alpha);
  o.t0 = s.number("t0", 1e-6, 0.25, o.t0);
  o.profile = s.text("profile", {"sqrt", "cuberoot"}, o.profile);
  o.flow_alpha = s.number("flow_alpha", -1e3, 1e3, o.flow_alpha);
  o.flow_beta = s.number("flow_beta", -1e3, 1e3, o.flow_beta);
  if (s.has("p")) {
    std::vector<double> p = number_list(s.raw("p"), "system.p", 2, 2, 0.0, 1.0);
    o.p1 = p[0];
    o.p2 = p[1];
  }
  s.finish();
}

void parse_potential(const json& v, RunConfig& cfg) {
  PotentialConfig& p = cfg.potential;
  if (v.is_string()) {
    p.kind = v.get<std::string>();
    if (p.kind != "zero" && p.kind != "geometric")
      throw ConfigError("potential: '" + p.kind + "' needs parameters; use an object with a kind key");
    return;
  }
  Section s(v, "potential");
  if (!s.has("kind")) throw ConfigError("potential.kind: missing");
  p.kind = s.text("kind", kPotentials, p.kind);
  p.value = s.number("value", -1e3, 1e3, p.value);
  p.q = s.number("q", -10, 10, p.q);
  p.offset = s.number("offset", -1e3, 1e3, p.offset);
  p.amplitude = s.number("amplitude", -1e3, 1e3, p.amplitude);
  if (s.has("wave")) p.wave = int_list(s.raw("wave"), "potential.wave", 1, kMaxDim, -64, 64);
  p.bins = s.integer("bins", 2, 256, p.bins);
  if (s.has("values")) p.values = number_list(s.raw("values"), "potential.values", 1, 1u << 24, -1e3, 1e3);
  s.finish();
  if (p.kind == "trig" && p.wave.empty()) throw ConfigError("potential.wave: required for a trig potential");
  if (p.kind == "grid" && (p.bins == 0 || p.values.empty()))
    throw ConfigError("potential: a grid potential needs bins and values");
}

}  // namespace

const std::map<std::string, double>& default_thresholds() {
  static const std::map<std::string, double> t{
      {"pressure_residual", 0.02},  {"pressure_spread", 0.05}, {"dimension_gap", 0.07},
      {"mass_ratio", 10},
      {"mass_trend", 0.05},         {"scaling_error", 0.05},   {"convergence_tv", 0.1},
      {"gibbs_spread", 10},         {"gibbs_trend", 0.05},     {"holonomy_lower", 0.95},
      {"holonomy_upper", 1.05},     {"density_c0", 3},         {"product_tv", 0.1},
      {"birkhoff_dispersion", 0.05}, {"transitivity_failures", 0}, {"overlap_factor", 1.2},
      {"conditional_consistency", 0.1}, {"lyapunov_theta", 0.1},
  };
  return t;
}

const std::vector<std::string>& pipeline_names() {
  static const std::vector<std::string> p{"press",  "cdim",         "refmeas", "evolve",   "gibbs",
                                          "holonomy", "disintegrate", "probe",   "fullsuite"};
  return p;
}

double RunConfig::threshold(const std::string& key) const {
  auto it = thresholds.find(key);
  if (it != thresholds.end()) return it->second;
  return default_thresholds().at(key);
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1 + static_cast<std::size_t>(
                               std::count(text.begin(), text.begin() + std::min(e.byte, text.size()), '\n'));
    throw ConfigError("parse error at line " + std::to_string(line) + ": " + e.what());
  }
  RunConfig cfg;
  Section top(j, "");
  cfg.schema_version = top.integer("schema_version", kSchemaVersion, kSchemaVersion, kSchemaVersion);
  if (!top.has("system")) throw ConfigError("system: missing");
  parse_system(top.raw("system"), cfg);
  if (top.has("potential")) parse_potential(top.raw("potential"), cfg);
  if (top.has("base"))
    cfg.base = number_list(top.raw("base"), "base", 2, kMaxDim, -1e6, 1e6);

  if (top.has("scales")) {
    Section s(top.raw("scales"), "scales");
    cfg.r = s.number("r", 1e-4, 0.2, cfg.r);
    if (s.has("tau")) cfg.tau = s.number("tau", 1e-3, 0.5, 0.4);
    s.finish();
  }
  if (top.has("orders")) {
    Section s(top.raw("orders"), "orders");
    cfg.N = s.integer("N", 1, 14, cfg.N);
    cfg.n_min = s.integer("n_min", 1, 14, cfg.n_min);
    cfg.n_max = s.integer("n_max", 1, 14, cfg.n_max);
    cfg.evolve_steps = s.integer("evolve_steps", 2, 100000, cfg.evolve_steps);
    cfg.invariant_steps = s.integer("invariant_steps", 2, 100000, cfg.invariant_steps);
    s.finish();
    if (cfg.n_max < cfg.n_min + 2) throw ConfigError("orders.n_max: needs at least three orders from n_min");
  }
  if (top.has("grids")) {
    Section s(top.raw("grids"), "grids");
    cfg.bins = s.integer("bins", 0, 256, cfg.bins);
    cfg.plaques = s.integer("plaques", 2, 256, cfg.plaques);
    cfg.u_cells = s.integer("u_cells", 2, 256, cfg.u_cells);
    cfg.partition_eps = s.number("partition_eps", 1e-3, 0.25, cfg.partition_eps);
    s.finish();
  }
  if (top.has("samples")) {
    Section s(top.raw("samples"), "samples");
    cfg.base_points = s.integer("base_points", 2, 1000, cfg.base_points);
    cfg.pairs = s.integer("pairs", 1, 100, cfg.pairs);
    cfg.gibbs_samples = s.integer("gibbs", 1, 100000, cfg.gibbs_samples);
    cfg.birkhoff_samples = s.integer("birkhoff", 2, 100000, cfg.birkhoff_samples);
    cfg.birkhoff_steps = s.integer("birkhoff_steps", 1, 10000000, cfg.birkhoff_steps);
    cfg.transitivity_pairs = s.integer("transitivity_pairs", 1, 10000, cfg.transitivity_pairs);
    s.finish();
  }
  if (top.has("thresholds")) {
    Section s(top.raw("thresholds"), "thresholds");
    for (const auto& [key, value] : default_thresholds()) {
      if (s.has(key)) cfg.thresholds[key] = s.number(key, 0, 1e9, value);
    }
    s.finish();
  }
  if (top.has("seed")) {
    const json& v = top.raw("seed");
    if (!v.is_number_unsigned()) throw ConfigError("seed: expected a non-negative integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  cfg.out_dir = top.text("output", {}, cfg.out_dir);
  if (cfg.out_dir.empty()) throw ConfigError("output: empty directory name");
  if (top.has("assert")) {
    if (!top.raw("assert").is_boolean()) throw ConfigError("assert: expected true or false");
    cfg.assert_mode = top.raw("assert").get<bool>();
  }
  cfg.jobs = top.integer("jobs", 1, 256, cfg.jobs);
  if (!top.has("pipeline")) throw ConfigError("pipeline: missing");
  const json& pl = top.raw("pipeline");
  if (!pl.is_array() || pl.empty()) throw ConfigError("pipeline: expected a non-empty list of pipeline names");
  for (const json& e : pl) {
    if (!e.is_string()) throw ConfigError("pipeline: expected pipeline names");
    std::string name = e.get<std::string>();
    const auto& names = pipeline_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw ConfigError("pipeline: unknown pipeline '" + name + "'");
    cfg.pipelines.push_back(name);
  }
  top.finish();

  if (cfg.base) {
    int want = cfg.system.id == "cat" ? 2 : cfg.system.id == "skew" ? 3 : 4;
    if (static_cast<int>(cfg.base->size()) != want)
      throw ConfigError("base: expected " + std::to_string(want) + " coordinates for system '" + cfg.system.id + "'");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

std::shared_ptr<System> build_system(const RunConfig& cfg) {
  return make_system(cfg.system);
}

Potential build_potential(const RunConfig& cfg, const std::shared_ptr<const System>& sys) {
  const PotentialConfig& p = cfg.potential;
  if (p.kind == "zero") return zero_potential();
  if (p.kind == "constant") return constant_potential(p.value);
  if (p.kind == "geometric") return geometric_potential(sys, p.q);
  if (p.kind == "trig") return trig_potential(p.offset, p.amplitude, p.wave);
  if (p.kind == "grid") return grid_potential(sys->dim(), p.bins, p.values);
  throw ConfigError("potential.kind: unknown value '" + p.kind + "'");
}

}  // namespace phm
