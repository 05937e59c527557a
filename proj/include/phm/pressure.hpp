#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phm/bowen.hpp"
#include "phm/potential.hpp"

namespace phm {

enum class SumMode { Separated, Spanning };

struct PartitionSum {
  double log_value = 0;  ///< log of sum over the set of exp(S_n phi)
  std::size_t cardinality = 0;
  int n = 0;
  double r = 0;
};

PartitionSum partition_sum(const System& sys, const Potential& phi, const LeafSegment& seg, int n, double r,
                           SumMode mode = SumMode::Separated);
/// Partition sum over an explicitly given point set.
PartitionSum partition_sum(const System& sys, const Potential& phi, const std::vector<TorusPoint>& pts, int n,
                           double r);

struct PressureOptions {
  int n_min = 6;
  int n_max = 12;
  double r = 0.05;
  std::vector<double> spread_radii{0.1, 0.05, 0.025};
  double half_length = 0.1;          ///< leaf segment [-h, h] around the base point
  double residual_threshold = 0.02;  ///< RMS of the log Z_n line fit
  double spread_threshold = 0.05;    ///< max - min slope across spread_radii
  SumMode mode = SumMode::Separated;
};

struct PressureEstimate {
  double value = 0;
  double intercept = 0;
  double residual = 0;
  double spread = 0;
  bool reliable = false;
  double r = 0;
  SumMode mode = SumMode::Separated;
  std::string domain;
  std::vector<int> orders;
  std::vector<double> log_z;          ///< log Z_n at the main radius
  std::vector<std::size_t> sizes;     ///< set cardinalities at the main radius
  std::vector<double> radius_slopes;  ///< slope per entry of spread_radii
};

PressureEstimate estimate_pressure(const System& sys, const Potential& phi, const TorusPoint& x,
                                   const PressureOptions& opt = {});

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double rms = 0;
  double slope_error = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided bounds of a diagnostic ratio over its sampled ranges.
struct DiagnosticBounds {
  std::string quantity;
  double lower = 0;
  double upper = 0;
  std::string ranges;
  bool passed = false;
};

struct SubmultiplicativeCheck {
  double z_sum = 0;    ///< Z_{k+l}(x)
  double z_first = 0;  ///< Z_k(x)
  double z_sup = 0;    ///< sup over sampled bases of Z_l
  double ratio = 0;
  double bound = 0;    ///< exp(Q_u)
  DiagnosticBounds bounds;
};

/// Z_{k+l}(x) / (Z_k(x) sup_y Z_l(y)) on segments [-r1, r1], radius r; the sup runs over x,
/// `samples` seeded random bases and the images f^k(E) of the separated set at x.
SubmultiplicativeCheck check_submultiplicative(const System& sys, const Potential& phi, const TorusPoint& x, int k,
                                               int l, double r, double r1, double q_u, int samples,
                                               std::uint64_t seed);

struct UniformityCheck {
  std::vector<int> orders;
  std::vector<double> min_normalized;  ///< min over bases of Z_n e^{-n P}
  std::vector<double> max_normalized;
  std::vector<double> cross_ratio;     ///< max / min over bases, per order
  double trend_slope = 0;              ///< slope of log cross_ratio against n
  DiagnosticBounds bounds;
};

UniformityCheck check_uniformity(const System& sys, const Potential& phi, const std::vector<TorusPoint>& bases,
                                 const std::vector<int>& orders, double r, double r1, double pressure);

struct SandwichCheck {
  double z_span = 0;
  double z_sep = 0;
  double z_span_half = 0;  ///< spanning sum at radius r/2
  double bound = 0;        ///< exp(q_u) * z_span_half
  bool passed = false;
};
/// Z^span(n,r) <= Z^sep(n,r) <= exp(q_u) Z^span(n,r/2), in linear scale.
SandwichCheck check_span_sep(const System& sys, const Potential& phi, const LeafSegment& seg, int n, double r,
                             double q_u);

/// Pressure from partition sums over product grids in a rectangle [-du,du] x [-dcs,dcs]^{d-1}.
PressureEstimate estimate_rectangle_pressure(const System& sys, const Potential& phi, const TorusPoint& x,
                                             int n_min, int n_max, double r, double du, double dcs);

}  // namespace phm
