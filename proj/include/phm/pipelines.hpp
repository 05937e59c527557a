#pragma once

#include <string>
#include <vector>

#include "phm/config.hpp"

namespace phm {

/// One asserted diagnostic: value compared against a configured threshold.
struct Check {
  std::string pipeline;
  std::string name;
  double value = 0;
  std::string relation;  ///< "<", "<=", ">", ">="
  double threshold = 0;
  bool passed = false;
};

struct RunReport {
  std::vector<std::string> tables;  ///< file names written under the output directory
  std::vector<Check> checks;
  std::string error;                ///< set when a pipeline aborted
  int exit_code = 0;                ///< 0 ok, 2 assertion failure, 3 pipeline failure
};

/// Run the configured pipelines, writing one CSV table per diagnostic and summary.json into
/// cfg.out_dir. Outputs written before a failure are kept.
RunReport run(const RunConfig& cfg);

}  // namespace phm
