#pragma once

#include <vector>

#include "phm/caratheodory.hpp"
#include "phm/phase_measure.hpp"
#include "phm/rectangle.hpp"

namespace phm {

/// Conditional measures of mu|_R along unstable plaques and the factor measure across them.
/// Plaques are slabs of a uniform grid in the cs coordinates of R; each conditional is
/// the normalized mass of the slab's u-cells.
struct ConditionalFamily {
  Rectangle rect;
  int plaques_per_axis = 0;
  int u_cells = 0;
  std::vector<CsVec> plaque_cs;                   ///< cs coordinates of each plaque centre
  std::vector<double> factor;                     ///< normalized plaque masses
  std::vector<std::vector<double>> conditionals;  ///< per plaque, mass per u-cell, summing to 1
  std::vector<std::vector<double>> cells;         ///< unnormalized cell masses of mu|_R
  std::size_t empty_plaques = 0;                  ///< plaques without mass (conditional set uniform)
  double mass = 0;                                ///< mu(R)
  double reconstruction_tv = 0;                   ///< bins of mu|_R against factor x conditionals

  std::size_t plaque_count() const { return plaque_cs.size(); }
  /// Point of the plaque at u = 0 (relative to the rectangle centre).
  TorusPoint plaque_point(const System& sys, std::size_t p) const;
};

/// `plaques` sets the slab count along a one-dimensional cs direction; with more cs axes
/// each gets round(plaques^(1/(d-1))) slabs. Each cell is integrated with sub^d midpoints.
ConditionalFamily disintegrate(const System& sys, const PhaseMeasure& mu, const Rectangle& R, int plaques = 32,
                               int u_cells = 32, int sub = 4);

/// Reference measures on each plaque of the family, anchored at its centre, radius du.
std::vector<LeafMeasure> plaque_references(const System& sys, const Potential& phi, const ConditionalFamily& fam,
                                           double r, int N, double pressure);

/// Replace the conditionals by the normalized references (self-comparison control).
ConditionalFamily with_reference_conditionals(const ConditionalFamily& fam, const std::vector<LeafMeasure>& refs);

struct DensityComparison {
  std::vector<std::vector<double>> ratios;  ///< per plaque and cell; NaN where excluded
  double c0 = 0;                            ///< max over cells of max(ratio, 1/ratio)
  std::size_t excluded = 0;                 ///< zero-mass cells
  DiagnosticBounds bounds;
};

/// Per-cell ratio of the conditional to the normalized reference measure of its plaque.
DensityComparison density_vs_reference(const ConditionalFamily& fam, const std::vector<LeafMeasure>& refs,
                                       double c0_threshold = 3.0);

struct ProductStructure {
  std::size_t generic_plaque = 0;
  double tv = 0;
  DiagnosticBounds bounds;
};

/// TV on R's cells between mu|_R and factor x (conditional of one generic plaque carried
/// to every other plaque by holonomy).
ProductStructure product_structure_check(const System& sys, const PhaseMeasure& mu, const Rectangle& R,
                                         int plaques = 32, int u_cells = 32, double threshold = 0.1);

/// Conditionals of two overlapping rectangles with identical cs extents (R2 a translate of
/// R1 along the unstable direction) restricted to their common u-range: largest relative
/// deviation of the pointwise ratio from its mean.
double overlap_consistency(const System& sys, const PhaseMeasure& mu, const Rectangle& R1, const Rectangle& R2,
                           int plaques = 32, int u_cells = 32);

/// f_* of one plaque conditional against the conditional of mu along the image plaque
/// (same cs thickness); largest relative deviation of the ratio from its mean.
double conditional_invariance(const System& sys, const PhaseMeasure& mu, const Rectangle& R, std::size_t plaque,
                              int plaques = 32, int u_cells = 32);

}  // namespace phm
