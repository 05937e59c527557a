#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "phm/config.hpp"
#include "phm/errors.hpp"
#include "phm/pipelines.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium-state diagnostics for partially hyperbolic torus maps"};
  std::string config_path, out_dir;
  bool assert_mode = false;
  int jobs = 0;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  auto* out_opt = app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_flag("--assert", assert_mode, "Exit with status 2 when a diagnostic misses its threshold");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1, 256));
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  phm::RunConfig cfg;
  try {
    cfg = phm::load_config(config_path);
  } catch (const phm::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  }
  if (*out_opt) cfg.out_dir = out_dir;
  if (assert_mode) cfg.assert_mode = true;
  if (*jobs_opt) cfg.jobs = jobs;
  if (*seed_opt) cfg.seed = seed;

  phm::RunReport rep;
  try {
    rep = phm::run(cfg);
  } catch (const phm::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  }
  for (const phm::Check& c : rep.checks)
    std::printf("%-5s %-13s %s = %.6g (%s %.6g)\n", c.passed ? "ok" : "FAIL", c.pipeline.c_str(), c.name.c_str(),
                c.value, c.relation.c_str(), c.threshold);
  if (!rep.error.empty()) std::fprintf(stderr, "pipeline failure: %s\n", rep.error.c_str());
  std::printf("wrote %zu tables and summary.json to %s\n", rep.tables.size(), cfg.out_dir.c_str());
  return rep.exit_code;
}
