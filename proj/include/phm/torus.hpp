#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace phm {

inline constexpr int kMaxDim = 4;

/// Fixed-capacity real vector; only the first `dim` entries are meaningful.
using Vec = std::array<double, kMaxDim>;

double wrap_unit(double v);

/// Point of the flat torus R^d / Z^d with every coordinate in [0, 1).
struct TorusPoint {
  int dim = 0;
  Vec x{};

  TorusPoint() = default;
  TorusPoint(int d, const Vec& coords);
  TorusPoint(std::initializer_list<double> coords);

  double operator[](int i) const { return x[i]; }
  bool operator==(const TorusPoint& o) const;
};

/// Nearest-representative displacement b - a, each component in [-1/2, 1/2).
Vec delta(const TorusPoint& a, const TorusPoint& b);
double torus_distance(const TorusPoint& a, const TorusPoint& b);
TorusPoint translate(const TorusPoint& a, const Vec& v);

double dot(const Vec& a, const Vec& b, int dim);
double norm(const Vec& a, int dim);
Vec scaled(const Vec& a, double s);
Vec added(const Vec& a, const Vec& b);

/// Uniform double in [0,1) from the top 53 bits; portable across standard libraries.
double unit_double(std::uint64_t bits);

/// k-th point of the Halton sequence in `dim` dimensions (primes 2,3,5,7,11).
std::array<double, 5> halton(std::uint64_t k, int dim);

}  // namespace phm
