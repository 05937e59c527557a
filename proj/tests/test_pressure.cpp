#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "phm/catalog.hpp"
#include "phm/errors.hpp"
#include "phm/pressure.hpp"

using namespace phm;

namespace {

std::shared_ptr<System> sys_by_id(const std::string& id) {
  SystemOptions o;
  o.id = id;
  return make_system(o);
}

// log of the Perron eigenvalue of [[2,1],[1,1]], computed independently of the library
double perron_log() {
  Eigen::Matrix2d a;
  a << 2, 1, 1, 1;
  return std::log(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(a).eigenvalues().maxCoeff());
}

const TorusPoint kBase{0.1234, 0.5678};

}  // namespace

TEST_CASE("partition sums of zero and constant potentials") {
  auto cat = sys_by_id("cat");
  const LeafSegment seg{kBase, -0.1, 0.1};
  for (int n : {3, 6}) {
    const PartitionSum z0 = partition_sum(*cat, zero_potential(), seg, n, 0.05);
    CHECK(z0.log_value == doctest::Approx(std::log(static_cast<double>(z0.cardinality))).epsilon(1e-12));
    CHECK(z0.cardinality == separated_set(*cat, seg, n, 0.05).size());
    const PartitionSum zc = partition_sum(*cat, constant_potential(0.7), seg, n, 0.05);
    CHECK(zc.log_value == doctest::Approx(z0.log_value + n * 0.7).epsilon(1e-12));
  }
}

TEST_CASE("log Z_n / n approaches the entropy on a cat leaf") {
  auto cat = sys_by_id("cat");
  const LeafSegment seg{kBase, -0.1, 0.1};
  const double h = perron_log();
  double prev_err = 1;
  for (int n : {6, 9, 12}) {
    const double err = std::abs(partition_sum(*cat, zero_potential(), seg, n, 0.05).log_value / n - h);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 0.25);
}

TEST_CASE("pressure of the cat map") {
  auto cat = sys_by_id("cat");
  const double h = perron_log();
  CHECK(h == doctest::Approx(0.96242).epsilon(1e-5));
  const PressureEstimate p0 = estimate_pressure(*cat, zero_potential(), kBase);
  CHECK(std::abs(p0.value - h) < 0.05);
  CHECK(p0.reliable);
  CHECK(p0.orders.size() == 7);
  CHECK(p0.radius_slopes.size() == 3);
  const PressureEstimate p1 = estimate_pressure(*cat, geometric_potential(cat, 1), kBase);
  CHECK(std::abs(p1.value) < 0.05);
}

TEST_CASE("pressure estimator is equivariant under constant shifts") {
  for (const std::string id : {"cat", "skew"}) {
    auto sys = sys_by_id(id);
    Vec v{0.1234, 0.5678, 0.3, 0};
    const TorusPoint x(sys->dim(), v);
    const Potential phi = trig_potential(0.1, 0.2, sys->dim() == 2 ? std::vector<int>{1, 1} : std::vector<int>{1, 1, 0});
    PressureOptions opt;
    opt.spread_radii = {0.05};
    const double base = estimate_pressure(*sys, phi, x, opt).value;
    for (double c : {-1.0, 0.25, 3.0}) CHECK(estimate_pressure(*sys, shifted(phi, c), x, opt).value - base == doctest::Approx(c).epsilon(1e-9));
  }
}

TEST_CASE("pressure of geometric potentials is affine in q") {
  auto cat = sys_by_id("cat");
  PressureOptions opt;
  opt.spread_radii = {0.05};
  std::vector<double> qs{0, 0.5, 1, 2}, ps;
  for (double q : qs) ps.push_back(estimate_pressure(*cat, geometric_potential(cat, q), kBase, opt).value);
  const LineFit fit = fit_line(qs, ps);
  const double h = perron_log();
  CHECK(fit.slope == doctest::Approx(-h).epsilon(0.05));
  CHECK(std::abs(fit.intercept - h) < 0.05);
  double worst = 0;
  for (std::size_t i = 0; i < qs.size(); ++i) worst = std::max(worst, std::abs(ps[i] - (1 - qs[i]) * h));
  CHECK(worst < 0.05);
  CHECK(fit.rms < 0.02);
}

TEST_CASE("line fit") {
  const LineFit f = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.slope == doctest::Approx(2));
  CHECK(f.intercept == doctest::Approx(1));
  CHECK(f.rms < 1e-12);
  CHECK_THROWS(fit_line({1}, {1}));
}

TEST_CASE("spanning and separated sums are sandwiched") {
  for (const std::string id : {"cat", "skew"}) {
    auto sys = sys_by_id(id);
    Vec v{0.1234, 0.5678, 0.3, 0};
    const LeafSegment seg{TorusPoint(sys->dim(), v), -0.1, 0.1};
    const Potential phi = sys->dim() == 2 ? trig_potential(0, 0.3, {1, 0}) : trig_potential(0, 0.3, {1, 0, 0});
    const double q_u = measure_bowen_constants(*sys, phi, 6, 10, 0.05, 20, 3).q_u;
    for (int n = 6; n <= 10; ++n) {
      const SandwichCheck s = check_span_sep(*sys, phi, seg, n, 0.05, q_u);
      CHECK(s.z_span <= s.z_sep * (1 + 1e-12));
      CHECK(s.z_sep <= s.bound * (1 + 1e-12));
      CHECK(s.passed);
    }
  }
}

TEST_CASE("submultiplicativity ratio for the zero potential") {
  auto cat = sys_by_id("cat");
  for (int k : {3, 5, 8})
    for (int l : {3, 5, 8}) {
      const SubmultiplicativeCheck s = check_submultiplicative(*cat, zero_potential(), kBase, k, l, 0.05, 0.1, 0, 4, 5);
      CHECK(s.ratio >= 0.25);
      CHECK(s.ratio <= 4);
    }
}

TEST_CASE("submultiplicativity: smallest case and constant shifts") {
  auto cat = sys_by_id("cat");
  const SubmultiplicativeCheck s11 = check_submultiplicative(*cat, zero_potential(), kBase, 1, 1, 0.05, 0.1, 0, 0, 5);
  const LeafSegment seg{kBase, -0.1, 0.1};
  CHECK(s11.z_sum == doctest::Approx(std::exp(partition_sum(*cat, zero_potential(), seg, 2, 0.05).log_value)));
  CHECK(s11.z_first == doctest::Approx(std::exp(partition_sum(*cat, zero_potential(), seg, 1, 0.05).log_value)));

  const Potential phi = trig_potential(0, 0.3, {1, 0});
  const SubmultiplicativeCheck a = check_submultiplicative(*cat, phi, kBase, 3, 4, 0.05, 0.1, 0, 4, 5);
  const SubmultiplicativeCheck b = check_submultiplicative(*cat, shifted(phi, 0.8), kBase, 3, 4, 0.05, 0.1, 0, 4, 5);
  CHECK(b.ratio == doctest::Approx(a.ratio).epsilon(1e-9));
  CHECK_THROWS_AS(check_submultiplicative(*cat, phi, kBase, 0, 4, 0.05, 0.1, 0, 4, 5), DomainError);
}

TEST_CASE("partition sums are submultiplicative") {
  auto cat = sys_by_id("cat");
  const Potential phi = trig_potential(0, 0.3, {1, 0});
  const double q_u = measure_bowen_constants(*cat, phi, 4, 8, 0.05, 20, 3).q_u;
  const SubmultiplicativeCheck s = check_submultiplicative(*cat, phi, kBase, 4, 4, 0.05, 0.1, q_u, 10, 5);
  CHECK(s.ratio <= s.bound * (1 + 1e-12));
  CHECK(s.bounds.passed);
  CHECK(s.ratio > 0.25);
  CHECK(s.ratio < 4);
}

TEST_CASE("normalized partition sums do not depend on the base point") {
  auto cat = sys_by_id("cat");
  const double h = perron_log();
  const UniformityCheck one = check_uniformity(*cat, zero_potential(), {kBase}, {6, 7, 8}, 0.05, 0.1, h);
  for (double c : one.cross_ratio) CHECK(c == 1.0);

  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<TorusPoint> bases;
  for (int i = 0; i < 8; ++i) bases.push_back(TorusPoint{u(rng), u(rng)});
  const UniformityCheck flat = check_uniformity(*cat, zero_potential(), bases, {6, 7, 8, 9}, 0.05, 0.1, h);
  for (double c : flat.cross_ratio) CHECK(std::abs(c - 1) <= 0.2);

  // a non-constant potential spreads the sums across bases, but not increasingly with n
  const Potential phi = trig_potential(0, 0.3, {1, 0});
  const UniformityCheck many = check_uniformity(*cat, phi, bases, {6, 7, 8, 9}, 0.05, 0.1,
                                                estimate_pressure(*cat, phi, kBase).value);
  CHECK(std::abs(many.trend_slope) <= 0.02);
  CHECK(many.bounds.passed);

  // fiber height of the skew product never enters the sums
  auto skew = sys_by_id("skew");
  std::vector<TorusPoint> fibers;
  for (double t : {0.0, 0.3, 0.77}) fibers.push_back(TorusPoint{0.1234, 0.5678, t});
  const UniformityCheck sk = check_uniformity(*skew, zero_potential(), fibers, {6, 8}, 0.05, 0.1, h);
  for (double c : sk.cross_ratio) CHECK(std::abs(c - 1) < 1e-6);
}

TEST_CASE("leafwise and rectangle pressure agree") {
  auto cat = sys_by_id("cat");
  const PressureEstimate leaf = estimate_pressure(*cat, zero_potential(), kBase);
  const PressureEstimate rect = estimate_rectangle_pressure(*cat, zero_potential(), kBase, 6, 10, 0.05, 0.1, 0.1);
  CHECK(std::abs(leaf.value - rect.value) < 0.05 + leaf.spread + rect.residual);
}
