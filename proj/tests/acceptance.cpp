// Acceptance run: one PASS/FAIL line per criterion. Exits nonzero only when a criterion
// fails that is not listed as unattainable in the README.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "phm/caratheodory.hpp"
#include "phm/catalog.hpp"
#include "phm/config.hpp"
#include "phm/equilibrium.hpp"
#include "phm/pipelines.hpp"
#include "phm/pressure.hpp"

using namespace phm;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double perron_log() {
  Eigen::Matrix2d a;
  a << 2, 1, 1, 1;
  return std::log(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(a).eigenvalues().maxCoeff());
}

std::shared_ptr<System> sys_by_id(const std::string& id) {
  SystemOptions o;
  o.id = id;
  return make_system(o);
}

const TorusPoint kBase{0.1234, 0.5678};

fs::path scratch() {
  static const fs::path d = [] {
    fs::path p = fs::temp_directory_path() / "phm_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

struct Outcome {
  RunReport report;
  json summary;
  double seconds = 0;

  bool passed(const std::string& pipeline, const std::string& name = "") const {
    bool any = false;
    for (const Check& c : report.checks)
      if (c.pipeline == pipeline && (name.empty() || c.name == name)) {
        if (!c.passed) return false;
        any = true;
      }
    return any && report.error.empty();
  }
  double value(const std::string& pipeline, const std::string& name) const {
    for (const Check& c : report.checks)
      if (c.pipeline == pipeline && c.name == name) return c.value;
    return std::nan("");
  }
};

RunConfig config(const std::string& system, std::vector<std::string> pipelines) {
  RunConfig c;
  c.system.id = system;
  c.pipelines = std::move(pipelines);
  return c;
}

Outcome execute(RunConfig cfg, const std::string& tag) {
  cfg.out_dir = (scratch() / tag).string();
  Outcome o;
  const auto t0 = Clock::now();
  o.report = run(cfg);
  o.seconds = seconds_since(t0);
  std::ifstream in(fs::path(cfg.out_dir) / "summary.json");
  o.summary = json::parse(in);
  if (!o.report.error.empty()) std::cerr << tag << ": " << o.report.error << "\n";
  return o;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

int unexpected = 0;

void report(int id, bool pass, const std::string& detail, bool known_unattainable = false) {
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << detail;
  if (!pass && known_unattainable) std::cout << "  [known unattainable, see README]";
  std::cout << std::endl;
  if (!pass && !known_unattainable) ++unexpected;
}

}  // namespace

int main() {
  const double h = perron_log();
  auto cat = sys_by_id("cat");
  auto skew = sys_by_id("skew");
  const Potential phi1 = geometric_potential(cat, 1);

  {
    const auto t0 = Clock::now();
    const PressureEstimate p = estimate_pressure(*cat, zero_potential(), kBase);
    const double s = seconds_since(t0);
    report(1, std::abs(p.value - h) < 0.05 && s < 120,
           "P = " + fmt(p.value) + " vs log Perron " + fmt(h) + ", " + fmt(s) + " s");
  }

  {
    double worst = 0;
    for (double q : {0.0, 0.5, 1.0, 2.0})
      worst = std::max(worst,
                       std::abs(estimate_pressure(*cat, geometric_potential(cat, q), kBase).value - (1 - q) * h));
    report(2, worst < 0.05, "max residual against (1-q) log lambda = " + fmt(worst));
  }

  {
    struct Case {
      std::string name;
      std::shared_ptr<System> sys;
      Potential phi;
    };
    const std::vector<Case> cases{{"cat/zero", cat, zero_potential()},
                                  {"cat/phi1", cat, phi1},
                                  {"skew/zero", skew, zero_potential()}};
    bool ok = true;
    std::string detail;
    for (const Case& c : cases) {
      const TorusPoint x(c.sys->dim(), Vec{0.1234, 0.5678, 0.3, 0});
      const auto t0 = Clock::now();
      const double P = estimate_pressure(*c.sys, c.phi, x).value;
      const double d = caratheodory_dim(*c.sys, c.phi, x).value;
      const double s = seconds_since(t0);
      ok = ok && std::abs(d - P) < 0.07 && s < 300;
      detail += c.name + " |dim - P| = " + fmt(std::abs(d - P)) + " (" + fmt(s) + " s)  ";
    }
    report(3, ok, detail);
  }

  {
    bool ok = true;
    std::string detail;
    for (const std::string id : {"cat", "skew"}) {
      RunConfig c = config(id, {"refmeas"});
      c.base_points = 20;
      c.n_min = 6;
      c.n_max = 12;
      const Outcome o = execute(c, "c4_" + id);
      ok = ok && o.passed("refmeas", "mass max/min") && o.passed("refmeas", "|log mass slope in N|");
      detail += id + " ratio " + fmt(o.value("refmeas", "mass max/min")) + " slope " +
                fmt(o.summary["pipelines"]["refmeas"]["log_mass_slope"].get<double>()) + "  ";
    }
    report(4, ok, detail);
  }

  {
    double worst = 0;
    for (const Potential& phi : {zero_potential(), phi1}) {
      const double P = estimate_pressure(*cat, phi, kBase).value;
      for (double e : scaling_check(*cat, phi, kBase, 1, 0.05, 10, P).relative_error) worst = std::max(worst, e);
    }
    report(5, worst < 0.05, "max relative error = " + fmt(worst));
  }

  {
    const Outcome o = execute(config("cat", {"gibbs"}), "c6");
    const json& g = o.summary["pipelines"]["gibbs"];
    report(6, o.passed("gibbs"),
           "Q max/min = " + fmt(o.value("gibbs", "Q max/min")) + ", trend = " + fmt(g["trend_slope"].get<double>()));
  }

  {
    const Outcome a = execute(config("cat", {"holonomy"}), "c7_cat");
    RunConfig c = config("skew", {"holonomy"});
    c.potential.kind = "trig";
    c.potential.amplitude = 0.3;
    c.potential.wave = {1, 0, 0};
    c.thresholds["holonomy_lower"] = 0.8;
    c.thresholds["holonomy_upper"] = 1.25;
    const Outcome b = execute(c, "c7_skew");
    auto range = [](const Outcome& o) {
      return "[" + fmt(o.value("holonomy", "min Jacobian ratio")) + ", " +
             fmt(o.value("holonomy", "max Jacobian ratio")) + "]";
    };
    report(7, a.passed("holonomy") && b.passed("holonomy"), "cat " + range(a) + ", skew " + range(b));
  }

  {
    std::string detail;
    bool cat_ok = true, skew_ok = true;
    for (const std::string id : {"cat", "skew"}) {
      RunConfig c = config(id, {"evolve"});
      c.evolve_steps = 40;
      c.pairs = 3;
      const Outcome o = execute(c, "c8_" + id);
      const bool ok = o.passed("evolve") && o.seconds < 600;
      (id == "cat" ? cat_ok : skew_ok) = ok;
      detail += id + " pair TV " + fmt(o.value("evolve", "max TV between base points")) + ", Lebesgue TV " +
                fmt(o.value("evolve", "max TV to Lebesgue")) + " (" + fmt(o.seconds) + " s)  ";
    }
    report(8, cat_ok && skew_ok, detail, cat_ok);
  }

  {
    RunConfig z = config("cat", {"disintegrate"});
    const Outcome a = execute(z, "c9_zero");
    RunConfig g = z;
    g.potential.kind = "geometric";
    g.potential.q = 1;
    const Outcome b = execute(g, "c9_phi1");
    report(9, a.passed("disintegrate", "max C0") && b.passed("disintegrate", "max C0"),
           "C0 zero " + fmt(a.value("disintegrate", "max C0")) + ", phi1 " + fmt(b.value("disintegrate", "max C0")));

    const Outcome s = execute(config("skew", {"disintegrate"}), "c10_skew");
    const std::string tv = "max product-structure TV";
    report(10, a.passed("disintegrate", tv) && s.passed("disintegrate", tv),
           "cat " + fmt(a.value("disintegrate", tv)) + ", skew " + fmt(s.value("disintegrate", tv)));
  }

  {
    // the pipeline builds the binned oracle for m x m_kappa and m x delta_p before comparing
    RunConfig c = config("slowprod", {"evolve", "gibbs"});
    c.pairs = 1;
    const Outcome o = execute(c, "c11");
    const json& nc = o.summary["pipelines"]["evolve"]["negative_control"];
    const double trend = o.summary["pipelines"]["gibbs"]["trend_slope"].get<double>();
    const bool separated = nc["tv"].get<double>() > nc["threshold"].get<double>();
    report(11, separated && trend > 0,
           "oracle gap " + fmt(nc["oracle_gap"].get<double>()) + ", threshold " +
               fmt(nc["threshold"].get<double>()) + ", TV " + fmt(nc["tv"].get<double>()) + ", Gibbs trend " +
               fmt(trend),
           separated);
  }

  {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    for (const std::string& id : catalog_ids()) {
      if (!sys_by_id(id)->satisfies_c1()) continue;
      const Outcome o = execute(config(id, {"invariants"}), "c12_" + id);
      int failed = 0;
      for (const Check& ch : o.report.checks)
        if (!ch.passed) {
          ++failed;
          std::cerr << id << ": " << ch.name << " = " << ch.value << "\n";
        }
      ok = ok && o.passed("invariants");
      detail += id + " " + std::to_string(o.report.checks.size() - failed) + "/" +
                std::to_string(o.report.checks.size()) + "  ";
    }
    const double s = seconds_since(t0);
    report(12, ok && s < 1800, detail + "(" + fmt(s) + " s)");
  }

  return unexpected == 0 ? 0 : 1;
}
