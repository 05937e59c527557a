#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phm/torus.hpp"

namespace phm {

/// Where a binned measure came from.
struct Provenance {
  std::string system;
  std::string potential;
  TorusPoint base;
  int n = 0;
};

/// Measure on T^d binned on a uniform grid; bin index runs first coordinate fastest.
class PhaseMeasure {
 public:
  PhaseMeasure() = default;
  PhaseMeasure(int dim, int bins);

  int dim() const { return dim_; }
  int bins() const { return bins_; }
  std::size_t size() const { return mass_.size(); }
  const std::vector<double>& masses() const { return mass_; }
  std::vector<double>& masses() { return mass_; }

  std::size_t index_of(const TorusPoint& p) const;
  std::array<int, kMaxDim> cell(std::size_t index) const;
  TorusPoint bin_center(std::size_t index) const;
  double bin_volume() const { return bin_volume_; }

  void add(const TorusPoint& p, double w);
  double total() const;
  /// Rescale to total mass 1; throws on an empty measure.
  void normalize();
  /// Mass per unit volume at p (piecewise constant on bins).
  double density(const TorusPoint& p) const;
  /// Merge a 2x-finer grid into this one: each coarse bin gets the sum of its 2^d children.
  PhaseMeasure coarsened() const;

  Provenance provenance;

 private:
  int dim_ = 0;
  int bins_ = 0;
  double bin_volume_ = 0;
  std::vector<double> mass_;
};

/// 32 bins per axis on T^2, 16 on T^3 and T^4.
int default_bins(int dim);

PhaseMeasure uniform_measure(int dim, int bins);

/// Half the L1 distance between the normalized bin masses.
double total_variation(const PhaseMeasure& a, const PhaseMeasure& b);

/// Points drawn by inverse-CDF over bin masses, uniform inside the chosen bin.
std::vector<TorusPoint> sample_points(const PhaseMeasure& mu, std::size_t count, std::uint64_t seed);

}  // namespace phm
