#pragma once

#include <cstdint>
#include <vector>

#include "phm/caratheodory.hpp"
#include "phm/pressure.hpp"
#include "phm/system.hpp"

namespace phm {

/// Set of points [y, z] with y on the unstable plaque and z on the cs plaque of a centre;
/// for straight leaves this is the box |u| <= du, |cs_k| <= dcs_k in local coordinates.
struct Rectangle {
  TorusPoint center;
  double du = 0;
  CsVec dcs{};

  bool contains(const System& sys, const TorusPoint& y, double slack = 0) const;
  /// Strictly inside, at least `margin` from every face.
  bool interior(const System& sys, const TorusPoint& y, double margin = 0) const;
  TorusPoint point(const System& sys, const LocalCoords& c) const { return sys.local_point(center, c); }
  double diameter(const System& sys) const;
};

Rectangle make_rectangle(const System& sys, const TorusPoint& center, double du, double dcs);

struct RectangleChecks {
  int samples = 0;
  int closure_failures = 0;
  double delta = 0;
  double delta1 = 0;  ///< R_n(x, delta1) inside B_n(x, delta) at every sample
  double delta2 = 0;  ///< B_n(x, delta) inside R_n(x, delta2) at every sample
  int nesting_failures = 0;
  bool passed = false;
};

/// Bracket closure on sampled pairs and the calibrated Bowen-ball nesting
/// R_n(x, d1) c B_n(x, d) c R_n(x, d2), where R_n(x, e) has u half-length rho_n(e) and cs half-width e.
RectangleChecks check_rectangle(const System& sys, const Rectangle& R, int n, double delta, int samples,
                                std::uint64_t seed);

/// pi_{yz}(x) = [z, x] on the unstable plaque of z.
TorusPoint holonomy_map(const System& sys, const Rectangle& R, const TorusPoint& y, const TorusPoint& z,
                        const TorusPoint& x);

struct HolonomyJacobian {
  std::vector<std::pair<double, double>> segments;  ///< sub-segments A of the plaque of y
  std::vector<double> ratios;                       ///< m_z(pi A) / m_y(A)
  DiagnosticBounds bounds;
};

/// Ratios of reference masses across the holonomy for `pieces` sub-segments of the plaque of y.
HolonomyJacobian holonomy_jacobian(const System& sys, const Potential& phi, const Rectangle& R, const TorusPoint& y,
                                   const TorusPoint& z, double r, int N, double pressure, int pieces = 8,
                                   double lower = 0.95, double upper = 1.05);

/// Finite cover of T^d by rectangles of diameter < epsilon with disjoint interiors.
/// Base T^2 uses the two-square tiling of the plane in eigen-coordinates (needs a
/// symmetric base matrix); extra fiber axes are cut by a uniform grid.
std::vector<Rectangle> rectangle_partition(const System& sys, double epsilon, std::uint64_t seed = 0);

struct PartitionCheck {
  std::size_t probes = 0;
  std::size_t uncovered = 0;      ///< probes in no rectangle
  std::size_t overlaps = 0;       ///< probes in two or more interiors
  std::size_t empty_interiors = 0;
  double max_diameter = 0;
  bool passed = false;
};
PartitionCheck check_partition(const System& sys, const std::vector<Rectangle>& rects, std::size_t probes,
                               std::uint64_t seed, double epsilon);

}  // namespace phm
