#pragma once

#include <cstdint>
#include <vector>

#include "phm/caratheodory.hpp"
#include "phm/catalog.hpp"
#include "phm/phase_measure.hpp"

namespace phm {

/// Signed factor by which f^k stretches leaf parameters at base (uniform-rate systems).
double leaf_scale(const System& sys, const TorusPoint& base, int k);
/// Volume of the unit box in local coordinates (|det| of e_u and the cs basis).
double chart_jacobian(const System& sys);

/// f^k of the atoms of m, reweighted by exp(k P - S_k phi): the prediction for the
/// reference measure of the image leaf. Parameters are rescaled by the leaf rate.
LeafMeasure pushforward(const System& sys, const Potential& phi, const LeafMeasure& m, int k, double pressure);

struct ScalingCheck {
  std::vector<std::pair<double, double>> segments;  ///< sub-segments A (parameters at x)
  std::vector<double> image_mass;                   ///< m_{f^k x}(f^k A)
  std::vector<double> predicted;                    ///< integral over A of exp(kP - S_k phi) dm_x
  std::vector<double> relative_error;
  DiagnosticBounds bounds;
};

/// Compares the reference measure on f^k of sub-segments of the leaf of x with the
/// density-reweighted reference measure at x, over `pieces` equal sub-segments plus
/// their union.
ScalingCheck scaling_check(const System& sys, const Potential& phi, const TorusPoint& x, int k, double r, int N,
                           double pressure, int pieces = 8);

struct EvolveOptions {
  int n_max = 40;
  int bins = 0;  ///< 0 picks default_bins(dim)
  double r = 0.05;
  int N = 9;
  std::size_t atom_budget = 1000000;
  bool keep_all = true;  ///< false returns mu_{n_max} only
};

/// mu_n = (1/n) sum_{k<n} f^k_* m_x / mass(m_x) for n = 1..n_max. Atoms beyond the budget
/// are merged per bin into one atom at the bin's mass-weighted centroid.
std::vector<PhaseMeasure> evolve_average(const System& sys, const Potential& phi, const TorusPoint& x,
                                         double pressure, const EvolveOptions& opt = {});

/// Same, starting from an explicit leaf measure.
std::vector<PhaseMeasure> evolve_average(const System& sys, const LeafMeasure& m, int n_max, int bins,
                                         std::size_t atom_budget = 1000000, bool keep_all = true);

struct ConvergenceProfile {
  std::vector<double> successive;  ///< TV(mu_n, mu_{n+1}), n = 1..
  std::vector<double> to_final;    ///< TV(mu_n, mu_last)
  double final_tv = 0;             ///< TV(mu_last, reference) when a reference is supplied
  /// Fraction of steps n -> n+1 beyond `from` where to_final fails to decrease.
  double nonmonotone_fraction = 0;
};

ConvergenceProfile convergence_profile(const std::vector<PhaseMeasure>& seq, int from = 5);

struct GibbsOptions {
  int samples = 200;
  int n_min = 3;
  int n_max = 8;
  double r = 0.05;
  int qmc_points = 8192;
  int min_bins = 4;  ///< balls hitting fewer bins are excluded (resolution floor)
  double spread_threshold = 10;
  double trend_threshold = 0.05;
  std::uint64_t seed = 7;
};

struct GibbsRatio {
  std::vector<int> orders;
  std::vector<double> min_q, max_q;
  std::vector<double> mean_log_q;
  double spread = 0;       ///< max / min over all accepted samples and orders
  double trend_slope = 0;  ///< slope of mean log Q against n
  std::size_t accepted = 0, excluded = 0;
  DiagnosticBounds bounds;
};

/// Q(x, n) = mu(B_n(x, r)) / exp(-n P + S_n phi(x)) for x sampled from mu; mu(B_n) by
/// quasi-Monte Carlo over a local box around x with mu's piecewise-constant density.
GibbsRatio gibbs_ratio(const System& sys, const Potential& phi, const PhaseMeasure& mu, double pressure,
                       const GibbsOptions& opt = {});

/// Binned m x m_kappa against m x delta_p on the slowed product.
struct NegativeControlOracle {
  double gap = 0;        ///< TV between the two binned limits
  double threshold = 0;  ///< half the gap
  double p_bin_mass = 0;  ///< m_kappa mass of the fiber bin holding p
  PhaseMeasure smooth, singular;
};
NegativeControlOracle negative_control_oracle(const SlowedProduct& sys, int bins);

}  // namespace phm
