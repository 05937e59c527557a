#include "phm/bowen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "phm/errors.hpp"

namespace phm {

namespace {

void check_args(int n, double r) {
  if (n < 1) throw DomainError("Bowen order n must be >= 1");
  if (!(r > 0)) throw DomainError("Bowen radius r must be positive");
}

double side_extent(const System& sys, const TorusPoint& x, int n, double r, double sign) {
  const double tau = sys.constants().tau;
  auto inside = [&](double t) { return dyn_metric(sys, x, sys.unstable_curve_point(x, sign * t), n) < r; };
  if (inside(tau)) return tau;
  double lo = 0, hi = tau;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * tau; ++it) {
    double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return lo;
}

// Parameter radius of u-Bowen balls along a segment: the smallest of the values at
// both ends and the middle (all equal for uniformly expanding leaves).
double segment_radius(const System& sys, const LeafSegment& seg, int n, double r) {
  double rho = 1e300;
  for (double t : {seg.lo, 0.5 * (seg.lo + seg.hi), seg.hi}) {
    BowenBallU b = u_bowen_ball(sys, seg.point(sys, t), n, r);
    rho = std::min({rho, -b.lo, b.hi});
  }
  return rho;
}

// Largest |dt| for which two points of the segment might still be closer than r in
// the torus metric. Equals r when the segment embeds without near self-returns.
double comparison_window(const System& sys, const LeafSegment& seg, double r) {
  const double len = seg.length();
  const Vec& e = sys.unstable_direction();
  double emax = 0;
  for (int i = 0; i < sys.dim(); ++i) emax = std::max(emax, std::abs(e[i]));
  if (1.5 * r * emax >= 0.5) return len;
  const TorusPoint o = seg.point(sys, seg.lo);
  const double step = r / 4;
  for (double dt = 1.5 * r; dt <= len + step; dt += step) {
    double d = torus_distance(o, sys.unstable_curve_point(o, std::min(dt, len)));
    if (d < r + step) return len;
  }
  return r;
}

// Chosen points with their first n iterates, hashed by the cell of the last iterate:
// d_n < r forces the last iterates within r, so only 3^d neighbouring cells are scanned.
class OrbitIndex {
 public:
  OrbitIndex(const System& sys, int n, double r)
      : sys_(sys), n_(n), r_(r), d_(sys.dim()), m_(std::max(1, static_cast<int>(std::floor(1.0 / r)))) {}

  std::vector<TorusPoint> orbit_of(const TorusPoint& p) const { return orbit(sys_, p, n_); }

  /// Whether some stored point with |t - t_j| < window is within d_n-distance r of `o`.
  bool near(const std::vector<TorusPoint>& o, double t, double window) const {
    auto c = cell_of(o.back());
    std::vector<long long> seen;
    int total = 1;
    for (int i = 0; i < d_; ++i) total *= 3;
    for (int code = 0; code < total; ++code) {
      std::array<int, kMaxDim> nb = c;
      int rest = code;
      for (int i = 0; i < d_; ++i) {
        nb[i] += rest % 3 - 1;
        rest /= 3;
      }
      long long k = key(nb);
      if (std::find(seen.begin(), seen.end(), k) != seen.end()) continue;
      seen.push_back(k);
      auto f = cells_.find(k);
      if (f == cells_.end()) continue;
      for (std::size_t idx : f->second) {
        if (std::abs(t - params_[idx]) >= window) continue;
        const TorusPoint* q = &flat_[idx * n_];
        double m = 0;
        for (int j = 0; j < n_ && m < r_; ++j) m = std::max(m, sys_.metric(o[j], q[j]));
        if (m < r_) return true;
      }
    }
    return false;
  }

  void add(const std::vector<TorusPoint>& o, double t) {
    cells_[key(cell_of(o.back()))].push_back(params_.size());
    params_.push_back(t);
    flat_.insert(flat_.end(), o.begin(), o.end());
  }

 private:
  std::array<int, kMaxDim> cell_of(const TorusPoint& p) const {
    std::array<int, kMaxDim> c{};
    for (int i = 0; i < d_; ++i) c[i] = std::min(m_ - 1, static_cast<int>(p.x[i] * m_));
    return c;
  }
  long long key(const std::array<int, kMaxDim>& c) const {
    long long k = 0;
    for (int i = 0; i < d_; ++i) k = k * m_ + ((c[i] % m_) + m_) % m_;
    return k;
  }

  const System& sys_;
  int n_;
  double r_;
  int d_, m_;
  std::vector<double> params_;
  std::vector<TorusPoint> flat_;
  std::unordered_map<long long, std::vector<std::size_t>> cells_;
};

// Whether t lies within `skip` of a sorted parameter (inside its closed-form u-Bowen ball).
bool within_ball(const std::vector<double>& sorted, double t, double skip) {
  if (skip <= 0 || sorted.empty()) return false;
  auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  if (it != sorted.end() && *it - t < skip) return true;
  return it != sorted.begin() && t - *std::prev(it) < skip;
}

}  // namespace

BowenBallU u_bowen_ball(const System& sys, const TorusPoint& x, int n, double r) {
  check_args(n, r);
  auto rate = sys.leaf_expansion();
  if (!rate || r * *rate >= 0.5) return u_bowen_ball_search(sys, x, n, r);
  double rho = std::min(r * std::pow(*rate, -(n - 1)), sys.constants().tau);
  return BowenBallU{x, n, r, -rho, rho};
}

BowenBallU u_bowen_ball_search(const System& sys, const TorusPoint& x, int n, double r) {
  check_args(n, r);
  return BowenBallU{x, n, r, -side_extent(sys, x, n, r, -1.0), side_extent(sys, x, n, r, 1.0)};
}

std::vector<TorusPoint> SeparatedSet::points(const System& sys) const {
  std::vector<TorusPoint> out;
  out.reserve(params.size());
  for (double t : params) out.push_back(domain.point(sys, t));
  return out;
}

SeparatedSet separated_set(const System& sys, const LeafSegment& seg, int n, double r) {
  check_args(n, r);
  if (!(seg.hi > seg.lo)) throw DomainError("leaf segment must have positive length");
  const double rho = segment_radius(sys, seg, n, r);
  // a hair above rho/4 so that four steps always clear the open ball: uniform gaps
  const double h = rho * (1 + 1e-6) / 4;
  const double window = comparison_window(sys, seg, r);
  const long count = static_cast<long>(std::floor(seg.length() / h)) + 1;
  if (count > 200000000L) throw DomainError("separated set candidate grid too large");

  SeparatedSet out;
  out.domain = seg;
  out.n = n;
  out.r = r;
  const double skip = sys.leaf_expansion() ? 0.999 * rho : 0.0;
  if (sys.leaf_translation_invariant()) {
    // offsets (in grid steps) at which two candidates are not n-separated
    const TorusPoint o = seg.point(sys, seg.lo);
    const long span = std::min(count - 1, static_cast<long>(std::ceil(window / h)));
    std::vector<long> bad;
    for (long m = 1; m <= span; ++m)
      if (static_cast<double>(m) * h < skip ||
          dyn_metric(sys, o, sys.unstable_curve_point(o, static_cast<double>(m) * h), n) < r)
        bad.push_back(m);
    std::vector<char> chosen(static_cast<std::size_t>(count), 0);
    for (long i = 0; i < count; ++i) {
      bool ok = true;
      for (long m : bad) {
        if (m > i) break;
        if (chosen[static_cast<std::size_t>(i - m)]) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      chosen[static_cast<std::size_t>(i)] = 1;
      out.params.push_back(seg.lo + static_cast<double>(i) * h);
    }
  } else {
    OrbitIndex index(sys, n, r);
    double last = -1e300;
    for (long i = 0; i < count; ++i) {
      double t = seg.lo + static_cast<double>(i) * h;
      // nothing within the current u-Bowen ball of the last choice can qualify
      if (t - last < skip) continue;
      std::vector<TorusPoint> o = index.orbit_of(seg.point(sys, t));
      if (index.near(o, t, window)) continue;
      index.add(o, t);
      out.params.push_back(t);
      last = t;
    }
  }
  // Grid maximality can miss thin gaps next to near returns; probe finer and add any
  // uncovered probe, which is separated from everything chosen by construction.
  const double step = rho / 8;
  const long probes = static_cast<long>(std::ceil(seg.length() / step));
  const std::vector<double> greedy = out.params;
  std::vector<double> open;
  for (long i = 0; i <= probes; ++i) {
    double t = std::min(seg.lo + static_cast<double>(i) * step, seg.hi);
    if (!within_ball(greedy, t, skip)) open.push_back(t);
  }
  bool added = false;
  if (!open.empty()) {
    OrbitIndex index(sys, n, r);
    for (double t : greedy) index.add(index.orbit_of(seg.point(sys, t)), t);
    for (double t : open) {
      std::vector<TorusPoint> o = index.orbit_of(seg.point(sys, t));
      if (index.near(o, t, window)) continue;
      index.add(o, t);
      out.params.push_back(t);
      added = true;
    }
  }
  if (added) std::sort(out.params.begin(), out.params.end());
  SpanningCheck chk = is_spanning(sys, out.params, seg, n, r);
  if (!chk.spanning)
    throw NumericalError("candidate grid too coarse to certify maximality of the separated set");
  out.maximal = true;
  out.spanning = true;
  return out;
}

SeparatedSet spanning_set(const System& sys, const LeafSegment& seg, int n, double r) {
  check_args(n, r);
  if (!(seg.hi > seg.lo)) throw DomainError("leaf segment must have positive length");
  SeparatedSet out;
  out.domain = seg;
  out.n = n;
  out.r = r;
  double t = seg.lo;
  for (;;) {
    BowenBallU b = u_bowen_ball(sys, seg.point(sys, std::min(t, seg.hi)), n, r);
    double rho = std::min(-b.lo, b.hi);
    double c = std::min(t + 0.99 * rho, seg.hi);
    out.params.push_back(c);
    if (c + 0.99 * rho >= seg.hi) break;
    t = c + 0.99 * rho;
  }
  SpanningCheck chk = is_spanning(sys, out.params, seg, n, r);
  if (!chk.spanning) throw NumericalError("greedy cover failed to span the segment");
  out.spanning = true;
  return out;
}

SpanningCheck is_spanning(const System& sys, const std::vector<double>& params, const LeafSegment& seg, int n,
                          double r) {
  check_args(n, r);
  SpanningCheck out;
  if (params.empty()) {
    out.witness = seg.lo;
    return out;
  }
  if (!std::is_sorted(params.begin(), params.end())) throw DomainError("set parameters must be ascending");
  const double rho = segment_radius(sys, seg, n, r);
  const double window = comparison_window(sys, seg, r);
  const double skip = sys.leaf_expansion() ? 0.999 * rho : 0.0;
  const double step = rho / 8;
  const long count = static_cast<long>(std::ceil(seg.length() / step));
  std::vector<double> open;
  for (long i = 0; i <= count; ++i) {
    double t = std::min(seg.lo + static_cast<double>(i) * step, seg.hi);
    if (!within_ball(params, t, skip)) open.push_back(t);
  }
  if (!open.empty()) {
    OrbitIndex index(sys, n, r);
    for (double t : params) index.add(index.orbit_of(seg.point(sys, t)), t);
    for (double t : open)
      if (!index.near(index.orbit_of(seg.point(sys, t)), t, window)) {
        out.witness = t;
        return out;
      }
  }
  out.spanning = true;
  return out;
}

bool is_separated(const System& sys, const std::vector<TorusPoint>& pts, int n, double r) {
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (sys.metric(pts[i], pts[j]) >= r) continue;
      if (dyn_metric(sys, pts[i], pts[j], n) < r) return false;
    }
  return true;
}

std::vector<TorusPoint> separated_subset(const System& sys, const std::vector<TorusPoint>& candidates, int n,
                                         double r) {
  check_args(n, r);
  OrbitIndex index(sys, n, r);
  std::vector<TorusPoint> chosen;
  const double inf = std::numeric_limits<double>::infinity();
  for (const TorusPoint& p : candidates) {
    std::vector<TorusPoint> o = index.orbit_of(p);
    if (index.near(o, 0.0, inf)) continue;
    index.add(o, 0.0);
    chosen.push_back(p);
  }
  return chosen;
}

BowenConstants measure_bowen_constants(const System& sys, const Potential& phi, int n_min, int n_max,
                                       double radius, int samples, std::uint64_t seed) {
  if (n_min < 1 || n_max < n_min || samples < 1) throw DomainError("bad Bowen-constant sampling ranges");
  std::mt19937_64 rng(seed);
  BowenConstants out;
  const int d = sys.dim();
  for (int s = 0; s < samples; ++s) {
    Vec c{};
    for (int i = 0; i < d; ++i) c[i] = unit_double(rng());
    TorusPoint x(d, c);
    std::vector<double> sx = birkhoff_prefix(sys, phi, x, n_max);
    for (int n = n_min; n <= n_max; ++n) {
      BowenBallU b = u_bowen_ball(sys, x, n, radius);
      for (double f : {-0.999, -0.5, 0.5, 0.999}) {
        double t = f < 0 ? -f * b.lo : f * b.hi;
        double sy = birkhoff_sum(sys, phi, sys.unstable_curve_point(x, t), n);
        out.q_u = std::max(out.q_u, std::abs(sx[n - 1] - sy));
      }
    }
    const double rc = std::min(radius, sys.constants().tau);
    for (int k = 0; k < 4; ++k) {
      CsVec dir{};
      double nn = 0;
      for (int i = 0; i < d - 1; ++i) {
        dir[i] = 2 * unit_double(rng()) - 1;
        nn += dir[i] * dir[i];
      }
      nn = std::sqrt(nn);
      if (nn == 0) continue;
      for (int i = 0; i < d - 1; ++i) dir[i] *= 0.999 * rc / nn;
      std::vector<double> sy = birkhoff_prefix(sys, phi, sys.cs_point(x, dir), n_max);
      for (int n = n_min; n <= n_max; ++n) out.q_cs = std::max(out.q_cs, std::abs(sx[n - 1] - sy[n - 1]));
    }
  }
  return out;
}

}  // namespace phm
