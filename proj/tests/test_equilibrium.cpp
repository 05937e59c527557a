#include <doctest.h>

#include <cmath>
#include <random>

#include "phm/catalog.hpp"
#include "phm/disintegration.hpp"
#include "phm/equilibrium.hpp"
#include "phm/errors.hpp"
#include "phm/probes.hpp"
#include "phm/rectangle.hpp"

using namespace phm;

namespace {

const double kGolden = (3 + std::sqrt(5.0)) / 2;
const double kEntropy = std::log(kGolden);
const TorusPoint kBase{0.1234, 0.5678};

std::shared_ptr<System> sys_by_id(const std::string& id) {
  SystemOptions o;
  o.id = id;
  return make_system(o);
}

// measure of the cat map averaged over 40 steps from a leaf through x, computed once
const PhaseMeasure& cat_mu(const TorusPoint& x = kBase) {
  static std::vector<std::pair<TorusPoint, PhaseMeasure>> cache;
  for (const auto& [p, m] : cache)
    if (p == x) return m;
  auto cat = sys_by_id("cat");
  EvolveOptions opt;
  opt.n_max = 40;
  opt.keep_all = false;
  cache.emplace_back(x, evolve_average(*cat, zero_potential(), x, kEntropy, opt).back());
  return cache.back().second;
}

// cat map with the straight-leaf shortcut switched off
class OpaqueCat : public ToralAutomorphism {
 public:
  OpaqueCat() : ToralAutomorphism(cat_matrix()) {}
  bool leaf_translation_invariant() const override { return false; }
};

}  // namespace

TEST_CASE("pushforward") {
  auto cat = sys_by_id("cat");
  const LeafMeasure m = reference_measure(*cat, zero_potential(), kBase, 0.05, 8, kEntropy, 0.1);
  const LeafMeasure same = pushforward(*cat, zero_potential(), m, 0, kEntropy);
  CHECK(same.params == m.params);
  CHECK(same.weights == m.weights);

  // whole segment: the image leaf is lambda_u times longer and carries e^h times the mass
  const LeafMeasure img = pushforward(*cat, zero_potential(), m, 1, kEntropy);
  CHECK(img.mass() == doctest::Approx(std::exp(kEntropy) * m.mass()).epsilon(1e-9));
  const LeafMeasure fresh =
      reference_measure(*cat, zero_potential(), iterate(*cat, kBase, 1), 0.05, 8, kEntropy, 0.1 * kGolden);
  CHECK(fresh.mass() / m.mass() == doctest::Approx(kGolden).epsilon(0.05));

  // constant potentials cancel against the shifted pressure
  const LeafMeasure mc = reference_measure(*cat, constant_potential(0.3), kBase, 0.05, 8, kEntropy + 0.3, 0.1);
  const LeafMeasure ic = pushforward(*cat, constant_potential(0.3), mc, 2, kEntropy + 0.3);
  const LeafMeasure i0 = pushforward(*cat, zero_potential(), m, 2, kEntropy);
  REQUIRE(ic.params.size() == i0.params.size());
  for (std::size_t i = 0; i < ic.params.size(); ++i) {
    CHECK(ic.params[i] == doctest::Approx(i0.params[i]).epsilon(1e-12));
    CHECK(ic.weights[i] == doctest::Approx(i0.weights[i]).epsilon(1e-9));
  }
}

TEST_CASE("scaling identity on the cat map") {
  auto cat = sys_by_id("cat");
  for (int q : {0, 1}) {
    const Potential phi = geometric_potential(cat, q);
    const double P = (1 - q) * kEntropy;
    const ScalingCheck s = scaling_check(*cat, phi, kBase, 1, 0.05, 10, P);
    REQUIRE(!s.relative_error.empty());
    for (double e : s.relative_error) CHECK(e < 0.05);
  }
  const LeafMeasure m = reference_measure(*cat, zero_potential(), kBase, 0.05, 8, kEntropy);
  CHECK(m.mass_in(0.1, 0.05) == 0.0);
}

TEST_CASE("evolved averages: first term, mass and the Lebesgue limit") {
  auto cat = sys_by_id("cat");
  EvolveOptions opt;
  opt.n_max = 40;
  const std::vector<PhaseMeasure> seq = evolve_average(*cat, zero_potential(), kBase, kEntropy, opt);
  REQUIRE(seq.size() == 40);
  for (const PhaseMeasure& mu : seq) CHECK(std::abs(mu.total() - 1) < 1e-9);

  const LeafMeasure m = reference_measure(*cat, zero_potential(), kBase, opt.r, opt.N, kEntropy);
  PhaseMeasure direct(2, 32);
  for (std::size_t i = 0; i < m.params.size(); ++i)
    direct.add(cat->unstable_curve_point(kBase, m.params[i]), m.weights[i] / m.mass());
  CHECK(total_variation(seq.front(), direct) < 1e-12);

  CHECK(total_variation(seq.back(), uniform_measure(2, 32)) < 0.1);
  CHECK(total_variation(seq.back(), cat_mu(TorusPoint{0.77, 0.21})) < 0.1);
  CHECK_THROWS_AS(evolve_average(*cat, zero_potential(), kBase, kEntropy, EvolveOptions{1}), DomainError);

  const ConvergenceProfile prof = convergence_profile(seq);
  CHECK(prof.nonmonotone_fraction <= 0.1);
  const ConvergenceProfile flat = convergence_profile({seq.back(), seq.back(), seq.back()});
  for (double d : flat.successive) CHECK(d == 0.0);
  for (double d : flat.to_final) CHECK(d == 0.0);
}

TEST_CASE("atom budget merges atoms without losing mass") {
  auto cat = sys_by_id("cat");
  EvolveOptions opt;
  opt.n_max = 12;
  opt.atom_budget = 2000;
  const std::vector<PhaseMeasure> seq = evolve_average(*cat, zero_potential(), kBase, kEntropy, opt);
  for (const PhaseMeasure& mu : seq) CHECK(std::abs(mu.total() - 1) < 1e-9);
}

TEST_CASE("coarsening is consistent with binning") {
  const PhaseMeasure& fine = cat_mu();
  const PhaseMeasure coarse = fine.coarsened();
  CHECK(coarse.bins() == fine.bins() / 2);
  CHECK(coarse.total() == doctest::Approx(fine.total()).epsilon(1e-12));
  for (std::size_t i = 0; i < fine.size(); ++i) {
    const TorusPoint c = fine.bin_center(i);
    CHECK(coarse.index_of(c) < coarse.size());
  }
  // merging bins cannot increase a total-variation distance
  const PhaseMeasure other = uniform_measure(2, fine.bins());
  CHECK(total_variation(coarse, other.coarsened()) <= total_variation(fine, other) + 1e-12);
}

TEST_CASE("Gibbs ratios of the cat map limit") {
  auto cat = sys_by_id("cat");
  const GibbsRatio g = gibbs_ratio(*cat, zero_potential(), cat_mu(), kEntropy);
  CHECK(g.accepted > 0);
  CHECK(g.spread < 10);
  CHECK(std::abs(g.trend_slope) < 0.05);
  // a coarse grid puts high orders below the resolution floor
  GibbsOptions opt;
  opt.samples = 20;
  opt.n_max = 12;
  const GibbsRatio coarse = gibbs_ratio(*cat, zero_potential(), uniform_measure(2, 8), kEntropy, opt);
  CHECK(coarse.excluded > 0);
}

TEST_CASE("holonomy maps") {
  auto cat = sys_by_id("cat");
  const Rectangle R = make_rectangle(*cat, kBase, 0.06, 0.06);
  const TorusPoint y = R.point(*cat, LocalCoords{0.01, {0.02}});
  const TorusPoint z = R.point(*cat, LocalCoords{-0.015, {-0.03}});
  const TorusPoint x = cat->local_point(y, LocalCoords{0.02, {0}});
  CHECK(torus_distance(holonomy_map(*cat, R, y, y, x), x) < 1e-12);
  CHECK(torus_distance(holonomy_map(*cat, R, y, z, y), cat->bracket(z, y)) < 1e-12);
  // parallel cs-leaves: a rigid translation in the leaf parameter
  const double du = cat->local_coords(holonomy_map(*cat, R, y, z, y), holonomy_map(*cat, R, y, z, x)).u;
  CHECK(du == doctest::Approx(0.02).epsilon(1e-9));
}

TEST_CASE("holonomy Jacobians") {
  auto cat = sys_by_id("cat");
  const Rectangle R = make_rectangle(*cat, kBase, 0.06, 0.06);
  const TorusPoint y = R.point(*cat, LocalCoords{0, {0.03}}), z = R.point(*cat, LocalCoords{0, {-0.04}});
  const HolonomyJacobian self = holonomy_jacobian(*cat, constant_potential(0.2), R, y, y, 0.05, 10, kEntropy + 0.2);
  for (double q : self.ratios) CHECK(q == doctest::Approx(1.0).epsilon(1e-12));
  const HolonomyJacobian lin = holonomy_jacobian(*cat, constant_potential(0.2), R, y, z, 0.05, 10, kEntropy + 0.2);
  for (double q : lin.ratios) CHECK(std::abs(q - 1) <= 0.05);

  auto skew = sys_by_id("skew");
  const TorusPoint s0{0.1234, 0.5678, 0.3};
  const Rectangle RS = make_rectangle(*skew, s0, 0.06, 0.06);
  const Potential phi = trig_potential(0, 0.3, {1, 0, 0});
  const double P = estimate_pressure(*skew, phi, s0).value;
  const HolonomyJacobian sk = holonomy_jacobian(*skew, phi, RS, RS.point(*skew, LocalCoords{0, {0.03, 0.05}}),
                                                RS.point(*skew, LocalCoords{0, {-0.04, -0.02}}), 0.05, 10, P, 8, 0.8,
                                                1.25);
  for (double q : sk.ratios) {
    CHECK(q >= 0.8);
    CHECK(q <= 1.25);
  }
}

TEST_CASE("rectangle partitions") {
  for (const std::string id : {"cat", "skew"}) {
    auto sys = sys_by_id(id);
    const std::vector<Rectangle> rects = rectangle_partition(*sys, 0.2, 1);
    const PartitionCheck pc = check_partition(*sys, rects, 3000, 2, 0.2);
    CHECK(pc.uncovered == 0);
    CHECK(pc.overlaps == 0);
    CHECK(pc.empty_interiors == 0);
    CHECK(pc.max_diameter < 0.2);
    CHECK(pc.passed);
  }
  CHECK_THROWS(rectangle_partition(*sys_by_id("cat"), 0.9, 1));
}

TEST_CASE("rectangle closure and Bowen nesting") {
  for (const std::string id : {"cat", "skew"}) {
    auto sys = sys_by_id(id);
    Vec v{0.1234, 0.5678, 0.3, 0};
    const Rectangle R = make_rectangle(*sys, TorusPoint(sys->dim(), v), 0.06, 0.06);
    const RectangleChecks rc = check_rectangle(*sys, R, 5, 0.05, 200, 3);
    CHECK(rc.closure_failures == 0);
    CHECK(rc.nesting_failures == 0);
    CHECK(rc.delta1 <= rc.delta);
    CHECK(rc.delta <= rc.delta2);
  }
}

TEST_CASE("disintegration of an exact product") {
  auto cat = sys_by_id("cat");
  const Rectangle R = make_rectangle(*cat, kBase, 0.06, 0.06);
  const ConditionalFamily fam = disintegrate(*cat, uniform_measure(2, 64), R, 8, 8);
  REQUIRE(fam.plaque_count() == 8);
  for (const auto& c : fam.conditionals)
    for (std::size_t j = 0; j < c.size(); ++j) CHECK(c[j] == doctest::Approx(fam.conditionals[0][j]).epsilon(0.02));
  for (double f : fam.factor) CHECK(f == doctest::Approx(1.0 / 8).epsilon(0.02));
  CHECK(fam.reconstruction_tv < 0.02);
  const ProductStructure ps = product_structure_check(*cat, uniform_measure(2, 64), R, 8, 8);
  CHECK(ps.tv < 0.02);
  CHECK_THROWS_AS(disintegrate(*cat, PhaseMeasure(2, 32), R, 8, 8), NumericalError);
}

TEST_CASE("disintegration of the cat map limit") {
  auto cat = sys_by_id("cat");
  const PhaseMeasure& mu = cat_mu();
  EvolveOptions opt;
  opt.n_max = 400;
  opt.keep_all = false;
  const PhaseMeasure converged = evolve_average(*cat, zero_potential(), kBase, kEntropy, opt).back();
  const std::vector<Rectangle> rects = rectangle_partition(*cat, 0.2, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    const Rectangle& R = rects[i * rects.size() / 3];
    const ConditionalFamily fam = disintegrate(*cat, mu, R, 32, 32);
    CHECK(fam.reconstruction_tv < 0.02);
    // leaf Lebesgue along plaques once the average has converged at bin scale
    const ConditionalFamily conv = disintegrate(*cat, converged, R, 32, 32);
    for (const auto& c : conv.conditionals)
      for (double v : c) CHECK(std::abs(v * 32 - 1) < 0.1);
    const std::vector<LeafMeasure> refs = plaque_references(*cat, zero_potential(), fam, 0.05, 10, kEntropy);
    CHECK(density_vs_reference(fam, refs).c0 < 3);
    const DensityComparison self = density_vs_reference(with_reference_conditionals(fam, refs), refs);
    CHECK(self.c0 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(product_structure_check(*cat, mu, R, 32, 32).tv < 0.1);
  }
}

TEST_CASE("conditionals agree across overlapping rectangles and along the dynamics") {
  auto cat = sys_by_id("cat");
  EvolveOptions opt;
  opt.n_max = 1000;
  opt.keep_all = false;
  const PhaseMeasure mu = evolve_average(*cat, zero_potential(), kBase, kEntropy, opt).back();
  const double side = 0.06;
  const Rectangle R1 = make_rectangle(*cat, kBase, side, side);
  const Rectangle R2 = make_rectangle(*cat, cat->unstable_curve_point(kBase, 0.55 * side), side, side);
  CHECK(overlap_consistency(*cat, mu, R1, R2, 8, 8) < 0.1);
  CHECK(conditional_invariance(*cat, mu, R1, 4, 8, 8) < 0.1);
  CHECK(overlap_consistency(*cat, uniform_measure(2, 64), R1, R2, 8, 8) < 0.02);
}

TEST_CASE("Birkhoff probes") {
  auto cat = sys_by_id("cat");
  const std::vector<TestFunction> tests{{"one", [](const TorusPoint&) { return 1.0; }},
                                        {"cos_x0", [](const TorusPoint& p) { return std::cos(2 * M_PI * p[0]); }}};
  const BirkhoffProbe bp = birkhoff_probe(*cat, cat_mu(), tests, 10000, 200, 9);
  REQUIRE(bp.rows.size() == 2);
  for (double a : bp.rows[0].forward) CHECK(a == doctest::Approx(1.0));
  CHECK(bp.rows[0].dispersion < 1e-12);
  CHECK(bp.rows[1].dispersion < 0.05);
  CHECK(std::abs(bp.rows[1].mean) < 0.05);

  // a mixture of orbits on the slowed fiber and off it does not average out
  SystemOptions o;
  o.id = "slowprod";
  auto sp = std::dynamic_pointer_cast<SlowedProduct>(make_system(o));
  const TorusPoint p = sp->flow().fixed_point();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<TorusPoint> starts;
  for (int i = 0; i < 10; ++i) starts.push_back(TorusPoint{u(rng), u(rng), i % 2 ? p[0] : u(rng), i % 2 ? p[1] : u(rng)});
  const std::vector<TestFunction> fiber{{"cos_y0", [](const TorusPoint& q) { return std::cos(2 * M_PI * q[2]); }}};
  const BirkhoffProbe mix = birkhoff_probe(*sp, starts, fiber, 300);
  CHECK(mix.rows[0].dispersion > 0.3);
  CHECK(mix.rows[0].split_gap > 0.6);
}

TEST_CASE("transitivity probes") {
  auto cat = sys_by_id("cat");
  const std::vector<TransitivityRow> rows = transitivity_probe(*cat, 0.1, 12, 50, 21);
  REQUIRE(rows.size() == 50);
  for (const TransitivityRow& r : rows) {
    CHECK(r.k >= 0);
    CHECK(r.k <= 12);
  }
  const TorusPoint x{0.3, 0.3};
  const TorusPoint y = cat->map(cat->unstable_curve_point(x, 0.04));
  const std::vector<TransitivityRow> one = transitivity_probe(*cat, 0.1, 12, {{x, y}});
  CHECK(one[0].k >= 0);
  CHECK(one[0].k <= 1);

  // the straight-leaf shortcut gives the same first hitting times as iterating every sample
  OpaqueCat opaque;
  const std::vector<TransitivityRow> slow = transitivity_probe(opaque, 0.1, 6, 10, 22);
  const std::vector<TransitivityRow> fast = transitivity_probe(*cat, 0.1, 6, 10, 22);
  for (std::size_t i = 0; i < slow.size(); ++i) CHECK(slow[i].k == fast[i].k);

  SkewProduct rational(cat_matrix(), 0.25, false);
  const std::vector<TransitivityRow> rs = transitivity_probe(rational, 0.05, 12, 40, 23);
  int failures = 0;
  for (const TransitivityRow& r : rs) failures += r.k < 0;
  CHECK(failures > 0);
}

TEST_CASE("negative-control oracle") {
  SystemOptions o;
  o.id = "slowprod";
  auto sp = std::dynamic_pointer_cast<SlowedProduct>(make_system(o));
  const NegativeControlOracle orc = negative_control_oracle(*sp, 16);
  // independent midpoint quadrature of the density 1/psi over the fiber bin holding p
  const SlowFlow& fl = sp->flow();
  const int m = 512;
  double total = 0, cell = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const TorusPoint q{(i + 0.5) / m, (j + 0.5) / m};
      const double w = 1 / fl.psi(q);
      total += w;
      if (static_cast<int>(q[0] * 16) == static_cast<int>(fl.fixed_point()[0] * 16) &&
          static_cast<int>(q[1] * 16) == static_cast<int>(fl.fixed_point()[1] * 16))
        cell += w;
    }
  CHECK(orc.p_bin_mass == doctest::Approx(cell / total).epsilon(0.02));
  CHECK(orc.gap == doctest::Approx(1 - cell / total).epsilon(1e-3));
  CHECK(orc.gap > 0.3);
  CHECK(orc.threshold == doctest::Approx(orc.gap / 2));
  CHECK(std::abs(orc.smooth.total() - 1) < 1e-9);
  CHECK(std::abs(orc.singular.total() - 1) < 1e-9);
}
