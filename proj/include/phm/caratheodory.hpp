#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "phm/bowen.hpp"
#include "phm/pressure.hpp"

namespace phm {

/// Chosen ball of a cover: centre grid index and Bowen order.
struct CoverBall {
  long center = 0;
  int order = 0;
};

struct CoverSolution {
  double cost = 0;
  double alpha = 0;
  int N = 0;
  int span = 0;
  std::size_t target_points = 0;
  std::vector<CoverBall> balls;
};

/// Exact minimum-weight cover of the target points of a leaf segment by u-Bowen balls
/// B^u_n(y, r), y on the certification grid, n in [N, N + span], weight exp(S_n phi(y) - n alpha).
///
/// The certification grid has spacing rho_{n_max}/2 over the whole segment; targets are
/// the grid points inside a union of closed parameter intervals. Requires u-Bowen radii
/// that do not depend on the centre (true for every catalog system).
class CoverProblem {
 public:
  CoverProblem(const System& sys, const Potential& phi, const LeafSegment& seg,
               std::vector<std::pair<double, double>> targets, double r, int n_min, int n_max);

  CoverSolution solve(double alpha, int N, int span = 6) const;

  double spacing() const { return h_; }
  long grid_size() const { return m_; }
  std::size_t target_count() const { return target_.size(); }
  double center_param(long i) const { return seg_.lo + static_cast<double>(i) * h_; }
  int n_min() const { return n_min_; }
  int n_max() const { return n_max_; }

 private:
  double birkhoff(long i, int n) const;

  LeafSegment seg_;
  double r_;
  int n_min_, n_max_;
  double h_ = 0;
  long m_ = 0;
  std::vector<long> target_;       ///< grid indices of target points, ascending
  std::vector<long> reach_;        ///< per order: largest k with k h < rho_n
  std::vector<double> sums_;       ///< S_n phi at centres, row per order (empty when phi is constant)
  std::optional<double> constant_;
};

CoverSolution cover_cost(const System& sys, const Potential& phi, const LeafSegment& seg,
                         const std::vector<std::pair<double, double>>& targets, double alpha, int N, double r,
                         int span = 6);

struct DimensionStep {
  double alpha = 0;
  double slope = 0;   ///< least-squares slope of log cost against N
  double slope_error = 0;
};

struct CaratheodoryDimension {
  double value = 0;
  double lo = 0;
  double hi = 0;
  bool ambiguous = false;  ///< bracket widened past ends whose trend was within fit error
  std::vector<DimensionStep> steps;
};

struct DimensionOptions {
  double r = 0.05;
  double half_length = 0.025;  ///< target and segment [-h, h]
  int N0 = 4;
  int n_values = 5;
  int span = 6;
  double tolerance = 0.02;
};

/// Critical alpha where the N-trend of the cover cost changes sign, by bisection.
CaratheodoryDimension caratheodory_dim(const System& sys, const Potential& phi, const TorusPoint& x,
                                       const DimensionOptions& opt = {});

/// Pressure value plus whether the estimator trusted it.
struct PressureInput {
  PressureInput(double v) : value(v) {}
  PressureInput(const PressureEstimate& e) : value(e.value), reliable(e.reliable) {}
  double value = 0;
  bool reliable = true;
};

/// Atomic approximation of the reference measure on an unstable segment.
struct LeafMeasure {
  TorusPoint base;
  double lo = 0, hi = 0;     ///< covered parameter range
  int order = 0;
  double r = 0;
  double pressure = 0;
  std::vector<double> params;   ///< ascending
  std::vector<double> weights;
  std::vector<double> prefix;   ///< prefix[i] = sum of weights[0..i)

  double mass() const { return prefix.empty() ? 0.0 : prefix.back(); }
  /// Mass of atoms with parameter in the closed interval [a, b].
  double mass_in(double a, double b) const;
  void rebuild_prefix();
};

/// Atoms on a maximal (N, r)-separated subset of [-radius, radius] with weight
/// exp(-N P + S_N phi); radius defaults to the system's tau.
LeafMeasure reference_measure(const System& sys, const Potential& phi, const TorusPoint& x, double r, int N,
                              PressureInput pressure, double radius = -1, bool force = false);

/// Reference measures at x and at y = x + s e_u, compared on `pieces` equal sub-segments of
/// the intersection of their leaf segments: the largest max(ratio, 1/ratio) of the masses.
double reference_overlap(const System& sys, const Potential& phi, const TorusPoint& x, double s, double r, int N,
                         double pressure, double radius = -1, int pieces = 4);

/// K = max(upper, 1/lower) over the masses of the given measures.
DiagnosticBounds mass_diagnostics(const std::vector<LeafMeasure>& measures, double* k_hat = nullptr);

/// Two-sided u-Gibbs bounds m(B^u_n(y, r)) / exp(-n P + S_n phi(y)) over atoms y and n.
DiagnosticBounds u_gibbs_bounds(const System& sys, const Potential& phi, const LeafMeasure& m, int n_min,
                                int n_max, int samples);

}  // namespace phm
