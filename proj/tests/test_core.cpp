#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "phm/catalog.hpp"
#include "phm/errors.hpp"
#include "phm/potential.hpp"
#include "phm/system.hpp"

using namespace phm;

namespace {

const double kGolden = (3 + std::sqrt(5.0)) / 2;

Eigen::Matrix2d cat_eigen() {
  Eigen::Matrix2d a;
  a << 2, 1, 1, 1;
  return a;
}

// unit eigenvectors of the symmetric cat matrix: column 0 stable, column 1 unstable
Eigen::Matrix2d cat_eigenvectors() {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cat_eigen());
  return es.eigenvectors();
}

TorusPoint wrap2(const Eigen::Vector2d& v) { return TorusPoint{wrap_unit(v[0]), wrap_unit(v[1])}; }

TorusPoint random_point(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  Vec v{};
  for (int i = 0; i < dim; ++i) v[i] = u(rng);
  return TorusPoint(dim, v);
}

}  // namespace

TEST_CASE("iterate: identity, fixed point and one matrix step") {
  auto cat = make_system({});
  const TorusPoint x{0.37, 0.81};
  CHECK(iterate(*cat, x, 0) == x);
  CHECK(torus_distance(iterate(*cat, TorusPoint{0, 0}, 5), TorusPoint{0, 0}) < 1e-12);
  CHECK(torus_distance(iterate(*cat, TorusPoint{0.1, 0.2}, 1), TorusPoint{0.4, 0.3}) < 1e-12);
}

TEST_CASE("iterate agrees with integer matrix powers mod 1") {
  auto cat = make_system({});
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const TorusPoint x = random_point(2, rng);
    const int k = 1 + trial % 8;
    Eigen::Matrix2d ak = Eigen::Matrix2d::Identity();
    for (int i = 0; i < k; ++i) ak = cat_eigen() * ak;
    const TorusPoint want = wrap2(ak * Eigen::Vector2d(x[0], x[1]));
    CHECK(torus_distance(iterate(*cat, x, k), want) < 1e-9);
    CHECK(torus_distance(iterate(*cat, iterate(*cat, x, k), -k), x) < 1e-9);
  }
}

TEST_CASE("dyn_metric examples") {
  auto cat = make_system({});
  const TorusPoint x{0.3, 0.6}, y{0.31, 0.62};
  CHECK(dyn_metric(*cat, x, y, 1) == doctest::Approx(torus_distance(x, y)).epsilon(1e-12));
  CHECK(dyn_metric(*cat, TorusPoint{0, 0}, TorusPoint{0.01, 0}, 2) == doctest::Approx(std::hypot(0.02, 0.01)));
  CHECK(dyn_metric(*cat, TorusPoint{0, 0}, TorusPoint{0.01, 0}, 2) == doctest::Approx(0.02236).epsilon(1e-4));
  CHECK(dyn_metric(*cat, x, x, 7) == 0.0);
}

TEST_CASE("d_n is nondecreasing in n") {
  for (const std::string id : {"cat", "skew"}) {
    SystemOptions o;
    o.id = id;
    auto sys = make_system(o);
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const TorusPoint x = random_point(sys->dim(), rng), y = random_point(sys->dim(), rng);
      double prev = 0;
      for (int n = 1; n <= 10; ++n) {
        const double d = dyn_metric(*sys, x, y, n);
        CHECK(d >= prev);
        prev = d;
      }
    }
  }
}

TEST_CASE("birkhoff_sum examples") {
  auto cat = make_system({});
  const TorusPoint x{0.2, 0.7};
  CHECK(birkhoff_sum(*cat, zero_potential(), x, 9) == 0.0);
  CHECK(birkhoff_sum(*cat, constant_potential(0.3), x, 5) == doctest::Approx(1.5));
  const double s3 = birkhoff_sum(*cat, geometric_potential(cat, 1), x, 3);
  CHECK(s3 == doctest::Approx(-3 * std::log(kGolden)).epsilon(1e-12));
  CHECK(s3 == doctest::Approx(-2.8873).epsilon(1e-4));
}

TEST_CASE("birkhoff cocycle identity S_{n+m}(x) = S_n(x) + S_m(f^n x)") {
  auto cat = make_system({});
  const Potential phi = trig_potential(0.1, 0.4, {1, 2});
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(0, 12);
  double worst = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const TorusPoint x = random_point(2, rng);
    const int n = len(rng), m = len(rng);
    const double lhs = birkhoff_sum(*cat, phi, x, n + m);
    const double rhs = birkhoff_sum(*cat, phi, x, n) + birkhoff_sum(*cat, phi, iterate(*cat, x, n), m);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("bracket examples") {
  auto cat = make_system({});
  const Eigen::Matrix2d ev = cat_eigenvectors();
  const TorusPoint o{0, 0};
  const TorusPoint y_s = wrap2(0.01 * ev.col(0));
  CHECK(torus_distance(cat->bracket(o, y_s), o) < 1e-9);

  const TorusPoint x{0.4, 0.3};
  CHECK(torus_distance(cat->bracket(x, x), x) < 1e-12);
  const TorusPoint on_u = cat->leaf_point(x, 0.05);
  CHECK(torus_distance(cat->bracket(x, on_u), on_u) < 1e-9);
  const TorusPoint on_cs = cat->cs_point(x, CsVec{0.04});
  CHECK(torus_distance(cat->bracket(x, on_cs), x) < 1e-9);
}

TEST_CASE("bracket plaque consistency") {
  for (const std::string id : {"cat", "skew", "slowprod"}) {
    SystemOptions o;
    o.id = id;
    auto sys = make_system(o);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0, 0.05);
    for (int trial = 0; trial < 200; ++trial) {
      const TorusPoint x = random_point(sys->dim(), rng);
      Vec v{};
      for (int i = 0; i < sys->dim(); ++i) v[i] = g(rng);
      const TorusPoint y = translate(x, v);
      const TorusPoint b = sys->bracket(x, y);
      CHECK(torus_distance(sys->bracket(b, y), b) < 1e-6);
      CHECK(torus_distance(sys->bracket(x, b), b) < 1e-6);
    }
  }
}

TEST_CASE("leaf_point examples") {
  auto cat = make_system({});
  const TorusPoint x{0.25, 0.5};
  CHECK(cat->leaf_point(x, 0) == x);
  const Eigen::Vector2d eu = cat_eigenvectors().col(1) * (cat_eigenvectors()(0, 1) > 0 ? 1 : -1);
  CHECK(eu[1] / eu[0] == doctest::Approx((std::sqrt(5.0) - 1) / 2));
  CHECK(torus_distance(cat->leaf_point(TorusPoint{0, 0}, 0.1), wrap2(0.1 * eu)) < 1e-12);

  SystemOptions o;
  o.id = "skew";
  auto skew = make_system(o);
  const TorusPoint z{0.1, 0.2, 0.7};
  const TorusPoint w = skew->leaf_point(z, 0.1);
  CHECK(w[2] == z[2]);
  CHECK(torus_distance(TorusPoint{w[0], w[1]}, wrap2(Eigen::Vector2d(0.1, 0.2) + 0.1 * eu)) < 1e-12);
}

TEST_CASE("leaf_point rejects parameters beyond tau") {
  auto cat = make_system({});
  const double tau = cat->constants().tau;
  CHECK_THROWS_AS(cat->leaf_point(TorusPoint{0.1, 0.1}, 1.5 * tau), DomainError);
}

TEST_CASE("local coordinates round trip") {
  SystemOptions o;
  o.id = "slowprod";
  auto sys = make_system(o);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int trial = 0; trial < 100; ++trial) {
    const TorusPoint x = random_point(4, rng);
    LocalCoords c;
    c.u = u(rng);
    for (int k = 0; k < 3; ++k) c.cs[k] = u(rng);
    const LocalCoords back = sys->local_coords(x, sys->local_point(x, c));
    CHECK(back.u == doctest::Approx(c.u).epsilon(1e-9));
    for (int k = 0; k < 3; ++k) CHECK(back.cs[k] == doctest::Approx(c.cs[k]).epsilon(1e-9));
  }
}

TEST_CASE("centre-stable excursions stay below theta on Lyapunov-stable systems") {
  for (const std::string id : {"cat", "skew"}) {
    SystemOptions o;
    o.id = id;
    auto sys = make_system(o);
    REQUIRE(sys->satisfies_c1());
    const double e = lyapunov_excursion(*sys, 0.01, 20, 200, 29);
    CHECK(e <= 0.01 + 1e-9);
    CHECK(e < 0.1);
  }
  CHECK_THROWS_AS(lyapunov_excursion(*make_system({}), -1, 5, 10, 1), DomainError);
}

TEST_CASE("tangent map expands the unstable direction at the leaf rate") {
  auto cat = make_system({});
  const Vec eu = cat->unstable_direction();
  const Vec img = cat->tangent_map(TorusPoint{0.3, 0.3}, eu);
  CHECK(norm(img, 2) == doctest::Approx(kGolden).epsilon(1e-9));
  const Vec es = cat->cs_basis()[0];
  CHECK(norm(cat->tangent_map(TorusPoint{0.3, 0.3}, es), 2) <= 1.0);
}
