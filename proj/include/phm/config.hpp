#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phm/catalog.hpp"
#include "phm/potential.hpp"

namespace phm {

inline constexpr int kSchemaVersion = 1;

struct PotentialConfig {
  std::string kind = "zero";  ///< zero | constant | geometric | trig | grid
  double value = 0;           ///< constant
  double q = 1;               ///< geometric
  double offset = 0, amplitude = 0;
  std::vector<int> wave;      ///< trig wave numbers
  int bins = 0;               ///< grid nodes per axis
  std::vector<double> values; ///< grid table, first axis fastest
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  SystemOptions system;
  PotentialConfig potential;
  std::optional<std::vector<double>> base;  ///< anchor point; a fixed generic point when absent

  double r = 0.05;
  std::optional<double> tau;  ///< leaf radius of reference measures (system tau when absent)

  int N = 10;           ///< order of reference measures
  int n_min = 6;        ///< order window of pressure fits and mass scans
  int n_max = 12;
  int evolve_steps = 40;
  int invariant_steps = 4000;  ///< averaging length of the measure used by the invariant suite

  int bins = 0;  ///< phase-space bins per axis; 0 = 32 on T^2, 16 otherwise
  int plaques = 32;
  int u_cells = 32;
  double partition_eps = 0.2;

  int base_points = 20;
  int pairs = 3;
  int gibbs_samples = 200;
  int birkhoff_samples = 200;
  int birkhoff_steps = 10000;
  int transitivity_pairs = 50;

  std::map<std::string, double> thresholds;  ///< overrides of default_thresholds()

  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool assert_mode = false;
  int jobs = 1;
  std::vector<std::string> pipelines;

  double threshold(const std::string& key) const;
};

/// Names and default values of every assertable threshold.
const std::map<std::string, double>& default_thresholds();
const std::vector<std::string>& pipeline_names();

/// Parse and validate a JSON run configuration. Throws ConfigError naming the key (and
/// the line for syntax errors).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::shared_ptr<System> build_system(const RunConfig& cfg);
Potential build_potential(const RunConfig& cfg, const std::shared_ptr<const System>& sys);

}  // namespace phm
