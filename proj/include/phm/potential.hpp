#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phm/system.hpp"

namespace phm {

/// Measured Bowen-property constants of a potential.
struct BowenConstants {
  double q_u = 0;   ///< sup |S_n phi(x) - S_n phi(y)| over y in the u-Bowen ball
  double q_cs = 0;  ///< same over y in the local cs-ball
};

class Potential {
 public:
  Potential(std::string label, std::function<double(const TorusPoint&)> f,
            std::optional<double> constant = std::nullopt);

  double operator()(const TorusPoint& x) const { return f_(x); }
  const std::string& label() const { return label_; }
  /// Set when phi is known to be a constant function.
  const std::optional<double>& constant() const { return constant_; }

  std::optional<BowenConstants> bowen;

 private:
  std::string label_;
  std::function<double(const TorusPoint&)> f_;
  std::optional<double> constant_;
};

Potential zero_potential();
Potential constant_potential(double c);
/// offset + amplitude * cos(2 pi k.x); fiber-constant when k vanishes on fiber coordinates.
Potential trig_potential(double offset, double amplitude, const std::vector<int>& k);
/// Periodic multilinear interpolation of a table with `bins` nodes per axis.
Potential grid_potential(int dim, int bins, std::vector<double> values);
Potential shifted(const Potential& phi, double c);
/// phi_q = -q log det Df|E^u.
Potential geometric_potential(std::shared_ptr<const System> sys, double q);

double birkhoff_sum(const System& sys, const Potential& phi, const TorusPoint& x, int n);
/// S_1, ..., S_n along one orbit: out[k] = S_{k+1} phi(x).
std::vector<double> birkhoff_prefix(const System& sys, const Potential& phi, const TorusPoint& x, int n);

}  // namespace phm
