#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "phm/potential.hpp"
#include "phm/system.hpp"

namespace phm {

/// Parameter interval [lo, hi] on the unstable line through `base`.
struct LeafSegment {
  TorusPoint base;
  double lo = 0;
  double hi = 0;

  double length() const { return hi - lo; }
  TorusPoint point(const System& sys, double t) const { return sys.unstable_curve_point(base, t); }
};

/// {t : d_n(x, leaf_point(x, t)) < r}; lo/hi are relative to the centre.
struct BowenBallU {
  TorusPoint center;
  int n = 1;
  double r = 0;
  double lo = 0;
  double hi = 0;
};

/// Closed form r * rate^-(n-1) clipped to tau when the system has a uniform leaf rate
/// (exact while r * rate < 1/2); otherwise falls back to the bisection search.
BowenBallU u_bowen_ball(const System& sys, const TorusPoint& x, int n, double r);
/// Bisection on the exact condition d_n < r, independent of any closed form.
BowenBallU u_bowen_ball_search(const System& sys, const TorusPoint& x, int n, double r);

/// Points of a leaf segment given by parameters, plus how they were produced.
struct SeparatedSet {
  LeafSegment domain;
  int n = 1;
  double r = 0;
  std::vector<double> params;  ///< ascending
  bool maximal = false;        ///< certified maximal (n, r)-separated
  bool spanning = false;       ///< certified (n, r)-spanning

  std::size_t size() const { return params.size(); }
  std::vector<TorusPoint> points(const System& sys) const;
};

/// Greedy maximal (n, r)-separated subset of a candidate grid of spacing rho_n / 4,
/// lowest parameter first; maximality is certified on an offset probe grid.
SeparatedSet separated_set(const System& sys, const LeafSegment& seg, int n, double r);
/// Greedy cover by u-Bowen balls; certified (n, r)-spanning.
SeparatedSet spanning_set(const System& sys, const LeafSegment& seg, int n, double r);

struct SpanningCheck {
  bool spanning = false;
  std::optional<double> witness;  ///< parameter of an uncovered probe
};
/// Probes the segment at spacing rho_n / 8 (plus both endpoints).
SpanningCheck is_spanning(const System& sys, const std::vector<double>& params, const LeafSegment& seg, int n,
                          double r);
/// Exhaustive pairwise check of d_n >= r.
bool is_separated(const System& sys, const std::vector<TorusPoint>& pts, int n, double r);

/// Greedy (n, r)-separated subset of arbitrary candidates (taken in order), using a
/// spatial hash of cell size r so that only nearby pairs are compared.
std::vector<TorusPoint> separated_subset(const System& sys, const std::vector<TorusPoint>& candidates, int n,
                                         double r);

/// Sup over sampled points and orders n in [n_min, n_max] of |S_n phi(x) - S_n phi(y)|,
/// y in the u-Bowen ball B^u_n(x, radius) (q_u) or in the cs-ball of radius `radius` (q_cs).
BowenConstants measure_bowen_constants(const System& sys, const Potential& phi, int n_min, int n_max,
                                       double radius, int samples, std::uint64_t seed);

}  // namespace phm
