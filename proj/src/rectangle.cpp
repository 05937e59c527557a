#include "phm/rectangle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "phm/errors.hpp"

namespace phm {

namespace {

LocalCoords random_coords(std::mt19937_64& rng, double du, const CsVec& dcs, int cs_dim) {
  LocalCoords c;
  c.u = du * (2 * unit_double(rng()) - 1);
  for (int k = 0; k < cs_dim; ++k) c.cs[k] = dcs[k] * (2 * unit_double(rng()) - 1);
  return c;
}

// R_n(x, e): u half-length rho_n(e), cs half-width e.
bool in_bowen_rectangle(const System& sys, const TorusPoint& x, const TorusPoint& y, int n, double e) {
  BowenBallU b = u_bowen_ball(sys, x, n, e);
  LocalCoords c = sys.local_coords(x, y);
  if (c.u <= b.lo || c.u >= b.hi) return false;
  for (int k = 0; k < sys.cs_dim(); ++k)
    if (std::abs(c.cs[k]) >= e) return false;
  return true;
}

}  // namespace

bool Rectangle::contains(const System& sys, const TorusPoint& y, double slack) const {
  LocalCoords c = sys.local_coords(center, y);
  if (std::abs(c.u) > du + slack) return false;
  for (int k = 0; k < sys.cs_dim(); ++k)
    if (std::abs(c.cs[k]) > dcs[k] + slack) return false;
  return true;
}

bool Rectangle::interior(const System& sys, const TorusPoint& y, double margin) const {
  LocalCoords c = sys.local_coords(center, y);
  if (std::abs(c.u) >= du - margin) return false;
  for (int k = 0; k < sys.cs_dim(); ++k)
    if (std::abs(c.cs[k]) >= dcs[k] - margin) return false;
  return true;
}

double Rectangle::diameter(const System& sys) const {
  const int dc = sys.cs_dim();
  double best = 0;
  for (int mask = 0; mask < (1 << dc); ++mask) {
    Vec v = scaled(sys.unstable_direction(), 2 * du);
    for (int k = 0; k < dc; ++k) {
      double s = (mask >> k) & 1 ? 2 * dcs[k] : -2 * dcs[k];
      for (int i = 0; i < sys.dim(); ++i) v[i] += s * sys.cs_basis()[k][i];
    }
    best = std::max(best, norm(v, sys.dim()));
  }
  return best;
}

Rectangle make_rectangle(const System& sys, const TorusPoint& center, double du, double dcs) {
  if (!(du > 0) || !(dcs > 0)) throw DomainError("rectangle sizes must be positive");
  if (du > sys.constants().tau || dcs > sys.constants().tau) throw DomainError("rectangle exceeds the local charts");
  Rectangle r{center, du, {}};
  for (int k = 0; k < sys.cs_dim(); ++k) r.dcs[k] = dcs;
  if (r.diameter(sys) >= sys.constants().r0) throw DomainError("rectangle diameter exceeds the bracket radius");
  return r;
}

RectangleChecks check_rectangle(const System& sys, const Rectangle& R, int n, double delta, int samples,
                                std::uint64_t seed) {
  if (samples < 1 || n < 1 || !(delta > 0)) throw DomainError("bad rectangle check ranges");
  std::mt19937_64 rng(seed);
  RectangleChecks out;
  out.samples = samples;
  out.delta = delta;
  const int dc = sys.cs_dim();
  for (int s = 0; s < samples; ++s) {
    TorusPoint y = R.point(sys, random_coords(rng, R.du, R.dcs, dc));
    TorusPoint z = R.point(sys, random_coords(rng, R.du, R.dcs, dc));
    try {
      if (!R.contains(sys, sys.bracket(y, z), 1e-9)) ++out.closure_failures;
    } catch (const std::exception&) {
      ++out.closure_failures;
    }
  }

  const TorusPoint& x = R.center;
  CsVec wide{};
  for (int k = 0; k < dc; ++k) wide[k] = 2 * delta;
  const double wide_u = 2 * u_bowen_ball(sys, x, n, 2 * delta).hi;
  std::vector<TorusPoint> ball;  // samples of B_n(x, delta)
  for (int s = 0; s < 8 * samples; ++s) {
    TorusPoint y = sys.local_point(x, random_coords(rng, wide_u, wide, dc));
    if (dyn_metric(sys, x, y, n) < delta) ball.push_back(y);
  }
  const double step = std::pow(2.0, 0.125);
  out.delta1 = 0;
  for (double e = delta; e > delta * 1e-3; e /= step) {
    BowenBallU b = u_bowen_ball(sys, x, n, e);
    CsVec w{};
    for (int k = 0; k < dc; ++k) w[k] = e;
    bool ok = true;
    for (int s = 0; s < samples && ok; ++s) {
      LocalCoords c = random_coords(rng, 1.0, w, dc);
      c.u = c.u < 0 ? -c.u * b.lo : c.u * b.hi;
      ok = dyn_metric(sys, x, sys.local_point(x, c), n) < delta;
    }
    if (ok) {
      out.delta1 = e;
      break;
    }
  }
  out.delta2 = std::numeric_limits<double>::infinity();
  for (double e = delta; e < delta * 1e3; e *= step) {
    bool ok = std::all_of(ball.begin(), ball.end(), [&](const TorusPoint& y) { return in_bowen_rectangle(sys, x, y, n, e); });
    if (ok) {
      out.delta2 = e;
      break;
    }
  }
  out.nesting_failures = (out.delta1 > 0 ? 0 : 1) + (std::isfinite(out.delta2) ? 0 : 1);
  out.passed = out.closure_failures == 0 && out.nesting_failures == 0;
  return out;
}

TorusPoint holonomy_map(const System& sys, const Rectangle& R, const TorusPoint& y, const TorusPoint& z,
                        const TorusPoint& x) {
  if (!R.contains(sys, y, 1e-12) || !R.contains(sys, z, 1e-12)) throw DomainError("holonomy endpoints outside R");
  LocalCoords c = sys.local_coords(y, x);
  for (int k = 0; k < sys.cs_dim(); ++k)
    if (std::abs(c.cs[k]) > 1e-9) throw DomainError("holonomy argument is not on the unstable plaque of y");
  return sys.bracket(z, x);
}

HolonomyJacobian holonomy_jacobian(const System& sys, const Potential& phi, const Rectangle& R, const TorusPoint& y,
                                   const TorusPoint& z, double r, int N, double pressure, int pieces, double lower,
                                   double upper) {
  if (pieces < 1) throw DomainError("holonomy check needs at least one piece");
  const double uy = sys.local_coords(R.center, y).u;
  const double uz = sys.local_coords(R.center, z).u;
  const double a = -R.du - uy, b = R.du - uy;
  const double radius = std::max(std::abs(a), std::abs(b));
  const double radius_z = std::max(std::abs(-R.du - uz), std::abs(R.du - uz));
  LeafMeasure my = reference_measure(sys, phi, y, r, N, pressure, radius, true);
  LeafMeasure mz = reference_measure(sys, phi, z, r, N, pressure, radius_z, true);

  HolonomyJacobian out;
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (int i = 0; i < pieces; ++i) {
    double s0 = a + (b - a) * i / pieces, s1 = a + (b - a) * (i + 1) / pieces;
    double t0 = sys.local_coords(z, holonomy_map(sys, R, y, z, sys.unstable_curve_point(y, s0))).u;
    double t1 = sys.local_coords(z, holonomy_map(sys, R, y, z, sys.unstable_curve_point(y, s1))).u;
    double src = my.mass_in(s0, s1);
    double dst = mz.mass_in(std::min(t0, t1), std::max(t0, t1));
    double ratio = src > 0 ? dst / src : std::numeric_limits<double>::infinity();
    out.segments.emplace_back(s0, s1);
    out.ratios.push_back(ratio);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  std::ostringstream rs;
  rs << "pieces=" << pieces << " N=" << N << " r=" << r;
  out.bounds = DiagnosticBounds{"holonomy Jacobian", lo, hi, rs.str(), lo >= lower && hi <= upper};
  return out;
}

std::vector<Rectangle> rectangle_partition(const System& sys, double epsilon, std::uint64_t seed) {
  if (!(epsilon > 0)) throw DomainError("partition scale must be positive");
  if (epsilon > sys.constants().r0) throw DomainError("partition scale exceeds the bracket radius");
  const int d = sys.dim();
  const Vec& e = sys.unstable_direction();
  const double a = e[0], b = e[1];
  if (std::abs(std::hypot(a, b) - 1) > 1e-9) throw DomainError("partition needs the unstable direction in the base plane");
  const Vec& c0 = sys.cs_basis()[0];
  // s axis (-b, a): the integer lattice becomes the one spanned by (a, -b) and (b, a),
  // tiled by squares of sides a and b
  if (std::abs(std::abs(-b * c0[0] + a * c0[1]) - 1) > 1e-9)
    throw DomainError("partition needs orthogonal base eigendirections (symmetric base matrix)");
  for (int k = 1; k < d - 1; ++k)
    if (std::abs(std::abs(sys.cs_basis()[k][k + 1]) - 1) > 1e-9)
      throw DomainError("partition needs fiber axes as centre directions");
  const double A = std::abs(a), B = std::abs(b);
  if (a < 0 || b < 0) throw DomainError("partition expects a positive unstable direction");

  const int fd = d - 2;
  int m = 1;
  if (fd > 0) m = static_cast<int>(std::floor(2 * std::sqrt(static_cast<double>(fd)) / epsilon)) + 1;
  const double room = epsilon * epsilon - fd / (static_cast<double>(m) * m);
  auto cuts = [&](double side) { return static_cast<int>(std::floor(side * std::sqrt(2.0) / std::sqrt(room))) + 1; };

  std::mt19937_64 rng(seed);
  const double t_off = seed ? unit_double(rng()) : 0.0;
  const double s_off = seed ? unit_double(rng()) : 0.0;

  struct Square {
    double t0, s0, side;
  };
  const Square squares[2] = {{0, 0, A}, {A, A - B, B}};
  std::vector<Rectangle> out;
  for (const Square& q : squares) {
    const int k = cuts(q.side);
    const double h = q.side / k;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const double tc = q.t0 + (i + 0.5) * h + t_off, sc = q.s0 + (j + 0.5) * h + s_off;
        for (long f = 0; f < static_cast<long>(std::pow(m, fd)); ++f) {
          Vec v{};
          v[0] = tc * a - sc * b;
          v[1] = tc * b + sc * a;
          long rest = f;
          Rectangle r;
          r.du = h / 2;
          r.dcs[0] = h / 2;
          for (int k2 = 0; k2 < fd; ++k2) {
            v[2 + k2] = (rest % m + 0.5) / m;
            rest /= m;
            r.dcs[1 + k2] = 0.5 / m;
          }
          r.center = TorusPoint(d, v);
          out.push_back(r);
        }
      }
  }
  return out;
}

PartitionCheck check_partition(const System& sys, const std::vector<Rectangle>& rects, std::size_t probes,
                               std::uint64_t seed, double epsilon) {
  PartitionCheck out;
  out.probes = probes;
  std::mt19937_64 rng(seed);
  for (const Rectangle& r : rects) {
    out.max_diameter = std::max(out.max_diameter, r.diameter(sys));
    if (!r.interior(sys, r.center)) ++out.empty_interiors;
  }
  for (std::size_t p = 0; p < probes; ++p) {
    Vec v{};
    for (int i = 0; i < sys.dim(); ++i) v[i] = unit_double(rng());
    TorusPoint y(sys.dim(), v);
    int closed = 0, open = 0;
    for (const Rectangle& r : rects) {
      if (!r.contains(sys, y, 1e-12)) continue;
      ++closed;
      if (r.interior(sys, y, 1e-12)) ++open;
    }
    if (closed == 0) ++out.uncovered;
    if (open >= 2) ++out.overlaps;
  }
  out.passed = out.uncovered == 0 && out.overlaps == 0 && out.empty_interiors == 0 && out.max_diameter < epsilon;
  return out;
}

}  // namespace phm
