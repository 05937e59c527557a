#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "phm/torus.hpp"

namespace phm {

using CsVec = std::array<double, kMaxDim - 1>;

/// Structural constants of a partially hyperbolic system.
struct SystemConstants {
  double r0 = 0;      ///< bracket radius: points closer than r0 have a unique local bracket
  double chi = 0;     ///< expansion rate along E^u
  double nu = 0;      ///< bound for ||Df|E^cs||; infinite when unbounded
  double lambda = 0;  ///< backward contraction rate on unstable leaves, in (1/chi, 1)
  double c1 = 1;
  double c2 = 1;      ///< carried but not used by any diagnostic
  double tau = 0;     ///< radius of the local unstable chart (u-Bowen property radius)
};

/// Position of y relative to x: y = x + u e_u + sum_i cs_i c_i (nearest representative).
struct LocalCoords {
  double u = 0;
  CsVec cs{};
};

/// A diffeomorphism of T^d with a one-dimensional unstable bundle whose leaves are
/// straight lines of constant direction e_u, and whose centre-stable bundle is the
/// kernel of a fixed covector l. All catalog systems have this shape; subclasses
/// only supply the map, its inverse and the unstable Jacobian.
class System {
 public:
  System(int dim, const Vec& e_u, const Vec& l_u, SystemConstants constants);
  virtual ~System() = default;

  virtual std::string id() const = 0;
  virtual TorusPoint map(const TorusPoint& x) const = 0;
  virtual TorusPoint inverse(const TorusPoint& x) const = 0;
  virtual double log_unstable_jacobian(const TorusPoint& x) const = 0;
  virtual bool satisfies_c1() const = 0;
  virtual bool transitive_c2() const = 0;

  /// Df(x) v. The default uses central differences of map().
  virtual Vec tangent_map(const TorusPoint& x, const Vec& v) const;

  /// Uniform expansion factor of unstable leaves when it is a constant.
  virtual std::optional<double> leaf_expansion() const { return std::nullopt; }
  /// True when f(x + s e_u) = f(x) + rate * s e_u for all x, so Bowen distances between
  /// points of one leaf depend only on their parameter offset.
  virtual bool leaf_translation_invariant() const { return false; }
  /// Closed-form topological entropy when known.
  virtual std::optional<double> topological_entropy() const { return std::nullopt; }

  int dim() const { return dim_; }
  int cs_dim() const { return dim_ - 1; }
  const SystemConstants& constants() const { return constants_; }
  const Vec& unstable_direction() const { return e_u_; }
  const Vec& cs_covector() const { return l_u_; }
  const std::array<Vec, kMaxDim - 1>& cs_basis() const { return cs_basis_; }

  double metric(const TorusPoint& a, const TorusPoint& b) const { return torus_distance(a, b); }

  /// Point at signed arclength t on the local unstable leaf of x; requires |t| <= tau.
  TorusPoint leaf_point(const TorusPoint& x, double t) const;
  /// Same as leaf_point but along the whole (global) unstable line.
  TorusPoint unstable_curve_point(const TorusPoint& x, double t) const;
  /// Point with chart coordinates s on the local centre-stable leaf of x; requires |s| <= tau.
  TorusPoint cs_point(const TorusPoint& x, const CsVec& s) const;
  TorusPoint local_point(const TorusPoint& x, const LocalCoords& c) const;
  LocalCoords local_coords(const TorusPoint& x, const TorusPoint& y) const;

  /// [x, y] = V^u_loc(x) intersected with V^cs_loc(y).
  TorusPoint bracket(const TorusPoint& x, const TorusPoint& y) const;

 protected:
  int dim_;
  Vec e_u_{};
  Vec l_u_{};
  std::array<Vec, kMaxDim - 1> cs_basis_{};
  SystemConstants constants_;
};

TorusPoint iterate(const System& sys, const TorusPoint& x, int k);
double dyn_metric(const System& sys, const TorusPoint& x, const TorusPoint& y, int n);

/// Orbit x, f(x), ..., f^{n-1}(x).
std::vector<TorusPoint> orbit(const System& sys, const TorusPoint& x, int n);

/// Largest max_{0<=k<=n_max} d(f^k x, f^k y) over sampled x and y on the local cs-leaf of x
/// with d(x, y) <= delta: bounded for Lyapunov-stable centre-stable leaves.
double lyapunov_excursion(const System& sys, double delta, int n_max, int samples, std::uint64_t seed);

}  // namespace phm
