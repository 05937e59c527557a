#include "phm/torus.hpp"

#include <cmath>
#include <stdexcept>

namespace phm {

double wrap_unit(double v) {
  double w = v - std::floor(v);
  // floor can leave exactly 1.0 for tiny negative inputs
  return w >= 1.0 ? 0.0 : w;
}

TorusPoint::TorusPoint(int d, const Vec& coords) : dim(d) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("torus dimension out of range");
  for (int i = 0; i < d; ++i) x[i] = wrap_unit(coords[i]);
}

TorusPoint::TorusPoint(std::initializer_list<double> coords) : dim(static_cast<int>(coords.size())) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("torus dimension out of range");
  int i = 0;
  for (double c : coords) x[i++] = wrap_unit(c);
}

bool TorusPoint::operator==(const TorusPoint& o) const {
  if (dim != o.dim) return false;
  for (int i = 0; i < dim; ++i)
    if (x[i] != o.x[i]) return false;
  return true;
}

Vec delta(const TorusPoint& a, const TorusPoint& b) {
  Vec v{};
  for (int i = 0; i < a.dim; ++i) {
    double d = b.x[i] - a.x[i];
    d -= std::floor(d + 0.5);
    v[i] = d;
  }
  return v;
}

double torus_distance(const TorusPoint& a, const TorusPoint& b) { return norm(delta(a, b), a.dim); }

TorusPoint translate(const TorusPoint& a, const Vec& v) {
  Vec c{};
  for (int i = 0; i < a.dim; ++i) c[i] = a.x[i] + v[i];
  return TorusPoint(a.dim, c);
}

double dot(const Vec& a, const Vec& b, int dim) {
  double s = 0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a, int dim) { return std::sqrt(dot(a, a, dim)); }

Vec scaled(const Vec& a, double s) {
  Vec r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] * s;
  return r;
}

Vec added(const Vec& a, const Vec& b) {
  Vec r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
  return r;
}

double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

std::array<double, 5> halton(std::uint64_t k, int dim) {
  static constexpr int primes[5] = {2, 3, 5, 7, 11};
  std::array<double, 5> out{};
  for (int d = 0; d < dim && d < 5; ++d) {
    double f = 1.0, r = 0.0;
    std::uint64_t i = k + 1;
    while (i > 0) {
      f /= primes[d];
      r += f * static_cast<double>(i % primes[d]);
      i /= primes[d];
    }
    out[d] = r;
  }
  return out;
}

}  // namespace phm
