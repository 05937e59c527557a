#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "phm/config.hpp"
#include "phm/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("phm_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string cli() {
  const char* p = std::getenv("PHM_CLI");
  REQUIRE_MESSAGE(p != nullptr, "PHM_CLI must point at the phm executable");
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = cli() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json summary(const fs::path& out) { return json::parse(slurp(out / "summary.json")); }

}  // namespace

TEST_CASE("minimal configuration runs the pressure pipeline") {
  const fs::path out = scratch() / "minimal";
  const fs::path cfg = write_config("minimal.json", R"({"system": "cat", "potential": "zero", "pipeline": ["press"]})");
  CHECK(run_cli("--config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "pressure.csv"));
  const json s = summary(out);
  CHECK(s["schema_version"] == phm::kSchemaVersion);
  CHECK(s["status"] == "ok");
  CHECK(std::abs(s["pipelines"]["press"]["pressure"].get<double>() - std::log((3 + std::sqrt(5.0)) / 2)) < 0.05);
}

TEST_CASE("configuration errors exit with status 1") {
  const fs::path out = scratch() / "bad";
  const std::string o = " --out " + out.string();
  CHECK(run_cli("--config " + write_config("sys.json", R"({"system": "henon", "pipeline": ["press"]})").string() + o) ==
        1);
  CHECK(run_cli("--config " + write_config("key.json", R"({"system": "cat", "pipline": ["press"]})").string() + o) == 1);
  CHECK(run_cli("--config " + write_config("syntax.json", "{\"system\": \"cat\",\n \"pipeline\": [\"press\"").string() +
                o) == 1);
  CHECK(run_cli("--config " + write_config("range.json", R"({"system": "cat", "pipeline": ["press"], "scales": {"r": -1}})").string() +
                o) == 1);
  CHECK(run_cli("--config " + write_config("pipe.json", R"({"system": "cat", "pipeline": ["teleport"]})").string() + o) == 1);
  CHECK(run_cli("--config " + (scratch() / "missing.json").string() + o) == 1);
  CHECK(run_cli("--config " + write_config("jobs.json", R"({"system": "cat", "pipeline": ["press"]})").string() + " --jobs 0" + o) == 1);
  CHECK(run_cli("--out " + out.string()) == 1);
}

TEST_CASE("parse_config validates keys and values") {
  CHECK_THROWS_AS(phm::parse_config(R"({"pipeline": ["press"]})"), phm::ConfigError);
  CHECK_THROWS_AS(phm::parse_config(R"({"system": "cat", "pipeline": ["press"], "orders": {"n_min": 8, "n_max": 9}})"), phm::ConfigError);
  CHECK_THROWS_AS(phm::parse_config(R"({"system": "cat", "pipeline": ["press"], "base": [0.1, 0.2, 0.3]})"), phm::ConfigError);
  CHECK_THROWS_AS(phm::parse_config(R"({"system": "cat", "pipeline": []})"), phm::ConfigError);
  CHECK_THROWS_AS(phm::parse_config(R"({"system": "cat", "pipeline": ["press"], "schema_version": 99})"), phm::ConfigError);
  CHECK_THROWS_AS(phm::parse_config(R"({"system": "cat", "pipeline": ["press"], "thresholds": {"no_such": 1}})"), phm::ConfigError);
  const phm::RunConfig c = phm::parse_config(
      R"({"system": {"id": "skew", "alpha": 0.3819660112501051}, "potential": {"kind": "geometric", "q": 2},
          "pipeline": ["press", "gibbs"], "seed": 9, "thresholds": {"gibbs_spread": 4}})");
  CHECK(c.system.id == "skew");
  CHECK(c.potential.kind == "geometric");
  CHECK(c.seed == 9);
  CHECK(c.threshold("gibbs_spread") == 4);
  CHECK(c.threshold("pressure_residual") == phm::default_thresholds().at("pressure_residual"));
}

TEST_CASE("assertion failures exit with status 2 and numerical failures with status 3") {
  const fs::path out = scratch() / "assert";
  const fs::path strict = write_config(
      "strict.json", R"({"system": "cat", "pipeline": ["press"], "thresholds": {"pressure_spread": 0}})");
  CHECK(run_cli("--config " + strict.string() + " --out " + out.string()) == 0);
  CHECK(run_cli("--config " + strict.string() + " --out " + out.string() + " --assert") == 2);
  CHECK(summary(out)["status"] == "assertion failure");

  const fs::path huge = write_config(
      "huge.json", R"({"system": "cat", "pipeline": ["press"], "scales": {"r": 0.0001}, "orders": {"n_min": 12, "n_max": 14}})");
  CHECK(run_cli("--config " + huge.string() + " --out " + (scratch() / "huge").string()) == 3);
  CHECK(fs::exists(scratch() / "huge" / "summary.json"));
}

TEST_CASE("identical configuration and seed give byte-identical tables") {
  const fs::path cfg = write_config(
      "det.json", R"({"system": "cat", "pipeline": ["refmeas", "gibbs", "holonomy"],
                      "samples": {"base_points": 4, "gibbs": 40}, "orders": {"evolve_steps": 20}})");
  const fs::path a = scratch() / "det_a", b = scratch() / "det_b", c = scratch() / "det_c";
  REQUIRE(run_cli("--config " + cfg.string() + " --out " + a.string()) == 0);
  REQUIRE(run_cli("--config " + cfg.string() + " --out " + b.string()) == 0);
  REQUIRE(run_cli("--config " + cfg.string() + " --out " + c.string() + " --jobs 3") == 0);
  int tables = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++tables;
    const std::string name = e.path().filename().string();
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / name), name);
    CHECK_MESSAGE(slurp(e.path()) == slurp(c / name), name);
  }
  CHECK(tables >= 5);

  const fs::path d = scratch() / "det_d";
  REQUIRE(run_cli("--config " + cfg.string() + " --out " + d.string() + " --seed 77") == 0);
  CHECK(summary(d)["seed"] == 77);
  CHECK(slurp(a / "refmeas_bases.csv") != slurp(d / "refmeas_bases.csv"));
}

TEST_CASE("every table starts with a schema line naming columns and units") {
  const fs::path out = scratch() / "minimal";
  if (!fs::exists(out / "pressure.csv")) {
    const fs::path cfg = write_config("minimal2.json", R"({"system": "cat", "pipeline": ["press"]})");
    REQUIRE(run_cli("--config " + cfg.string() + " --out " + out.string()) == 0);
  }
  for (const fs::path& dir : {scratch() / "minimal", scratch() / "det_a"}) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() != ".csv") continue;
      std::ifstream in(e.path());
      std::string schema, header;
      std::getline(in, schema);
      std::getline(in, header);
      const std::string name = e.path().filename().string();
      CHECK_MESSAGE(schema.rfind("# schema " + name + ": ", 0) == 0, name);
      // one bracketed unit per header column
      std::size_t cols = 1, units = 0;
      for (char ch : header) cols += ch == ',';
      for (char ch : schema) units += ch == '[';
      CHECK_MESSAGE(cols == units, name);
    }
  }
}

TEST_CASE("the slowed product fails its full suite in assertion mode") {
  const fs::path out = scratch() / "slowprod";
  const fs::path cfg = write_config("slowprod.json", R"({
    "system": "slowprod", "potential": "zero", "pipeline": ["fullsuite"],
    "orders": {"N": 6, "n_min": 4, "n_max": 6, "evolve_steps": 40, "invariant_steps": 200},
    "grids": {"plaques": 8, "u_cells": 8},
    "samples": {"base_points": 3, "pairs": 1, "gibbs": 40, "birkhoff": 4, "birkhoff_steps": 200, "transitivity_pairs": 3}
  })");
  const int code = run_cli("--config " + cfg.string() + " --out " + out.string() + " --assert");
  CHECK(code != 0);
  CHECK(code == 2);
  const json s = summary(out);
  bool independence = false, gibbs = false, control = false;
  for (const json& c : s["checks"]) {
    if (c["pipeline"] == "evolve" && c["name"].get<std::string>().find("between base points") != std::string::npos)
      independence = !c["passed"].get<bool>();
    if (c["pipeline"] == "gibbs" && !c["passed"].get<bool>()) gibbs = true;
    if (c["pipeline"] == "evolve" && c["name"].get<std::string>().find("negative control") != std::string::npos)
      control = c["passed"].get<bool>();
  }
  CHECK(independence);
  CHECK(gibbs);
  CHECK(control);
  CHECK(fs::exists(out / "negative_control.csv"));
  CHECK(fs::exists(out / "invariants.csv"));
}
