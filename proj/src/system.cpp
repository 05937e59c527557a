#include "phm/system.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "phm/errors.hpp"

namespace phm {

namespace {

constexpr int kMaxIterate = 1000000;

// Orthonormal basis of the kernel of l by Gram-Schmidt on the standard basis.
std::array<Vec, kMaxDim - 1> kernel_basis(const Vec& l, int dim) {
  std::array<Vec, kMaxDim - 1> basis{};
  std::vector<Vec> found;
  Vec ln = scaled(l, 1.0 / norm(l, dim));
  for (int k = 0; k < dim && static_cast<int>(found.size()) < dim - 1; ++k) {
    Vec v{};
    v[k] = 1.0;
    double c = dot(v, ln, dim);
    for (int i = 0; i < dim; ++i) v[i] -= c * ln[i];
    for (const Vec& b : found) {
      double cb = dot(v, b, dim);
      for (int i = 0; i < dim; ++i) v[i] -= cb * b[i];
    }
    double nv = norm(v, dim);
    if (nv < 1e-8) continue;
    found.push_back(scaled(v, 1.0 / nv));
  }
  for (std::size_t i = 0; i < found.size(); ++i) basis[i] = found[i];
  return basis;
}

}  // namespace

System::System(int dim, const Vec& e_u, const Vec& l_u, SystemConstants constants)
    : dim_(dim), constants_(constants) {
  if (dim < 2 || dim > kMaxDim) throw ConfigError("system dimension must be in [2, 4]");
  double ne = norm(e_u, dim);
  double nl = norm(l_u, dim);
  if (ne == 0 || nl == 0) throw ConfigError("degenerate splitting vectors");
  e_u_ = scaled(e_u, 1.0 / ne);
  l_u_ = scaled(l_u, 1.0 / nl);
  if (std::abs(dot(e_u_, l_u_, dim)) < 1e-9) throw ConfigError("unstable direction lies in the cs kernel");
  cs_basis_ = kernel_basis(l_u_, dim);
}

Vec System::tangent_map(const TorusPoint& x, const Vec& v) const {
  double nv = norm(v, dim_);
  if (nv == 0) return Vec{};
  const double h = 1e-6;
  Vec step = scaled(v, h / nv);
  TorusPoint plus = map(translate(x, step));
  TorusPoint minus = map(translate(x, scaled(step, -1.0)));
  Vec d = delta(minus, plus);
  return scaled(d, nv / (2 * h));
}

TorusPoint System::leaf_point(const TorusPoint& x, double t) const {
  if (std::abs(t) > constants_.tau * (1 + 1e-12))
    throw DomainError("leaf parameter " + std::to_string(t) + " outside the local chart");
  return unstable_curve_point(x, t);
}

TorusPoint System::unstable_curve_point(const TorusPoint& x, double t) const {
  return translate(x, scaled(e_u_, t));
}

TorusPoint System::cs_point(const TorusPoint& x, const CsVec& s) const {
  Vec v{};
  double n2 = 0;
  for (int k = 0; k < dim_ - 1; ++k) {
    n2 += s[k] * s[k];
    for (int i = 0; i < dim_; ++i) v[i] += s[k] * cs_basis_[k][i];
  }
  if (std::sqrt(n2) > constants_.tau * (1 + 1e-12)) throw DomainError("cs parameter outside the local chart");
  return translate(x, v);
}

TorusPoint System::local_point(const TorusPoint& x, const LocalCoords& c) const {
  Vec v = scaled(e_u_, c.u);
  for (int k = 0; k < dim_ - 1; ++k)
    for (int i = 0; i < dim_; ++i) v[i] += c.cs[k] * cs_basis_[k][i];
  return translate(x, v);
}

LocalCoords System::local_coords(const TorusPoint& x, const TorusPoint& y) const {
  Vec v = delta(x, y);
  LocalCoords c;
  c.u = dot(l_u_, v, dim_) / dot(l_u_, e_u_, dim_);
  Vec w = v;
  for (int i = 0; i < dim_; ++i) w[i] -= c.u * e_u_[i];
  for (int k = 0; k < dim_ - 1; ++k) c.cs[k] = dot(w, cs_basis_[k], dim_);
  return c;
}

TorusPoint System::bracket(const TorusPoint& x, const TorusPoint& y) const {
  if (metric(x, y) >= constants_.r0) throw DomainError("bracket arguments farther apart than r0");
  LocalCoords c = local_coords(x, y);
  double cs2 = 0;
  for (int k = 0; k < dim_ - 1; ++k) cs2 += c.cs[k] * c.cs[k];
  if (std::abs(c.u) > constants_.tau || std::sqrt(cs2) > constants_.tau)
    throw NumericalError("bracket intersection falls outside the local charts");
  return unstable_curve_point(x, c.u);
}

TorusPoint iterate(const System& sys, const TorusPoint& x, int k) {
  if (std::abs(k) > kMaxIterate) throw DomainError("iteration count exceeds the orbit budget");
  TorusPoint y = x;
  if (k >= 0)
    for (int i = 0; i < k; ++i) y = sys.map(y);
  else
    for (int i = 0; i < -k; ++i) y = sys.inverse(y);
  return y;
}

double dyn_metric(const System& sys, const TorusPoint& x, const TorusPoint& y, int n) {
  if (n < 1) throw DomainError("dynamical metric needs n >= 1");
  double m = 0;
  TorusPoint a = x, b = y;
  for (int k = 0; k < n; ++k) {
    if (k > 0) {
      a = sys.map(a);
      b = sys.map(b);
    }
    m = std::max(m, sys.metric(a, b));
  }
  return m;
}

std::vector<TorusPoint> orbit(const System& sys, const TorusPoint& x, int n) {
  std::vector<TorusPoint> out;
  out.reserve(n);
  TorusPoint y = x;
  for (int k = 0; k < n; ++k) {
    out.push_back(y);
    if (k + 1 < n) y = sys.map(y);
  }
  return out;
}

double lyapunov_excursion(const System& sys, double delta, int n_max, int samples, std::uint64_t seed) {
  if (!(delta > 0) || delta > sys.constants().tau || n_max < 0 || samples < 1)
    throw DomainError("stability probe needs 0 < delta <= tau, n_max >= 0 and samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  double worst = 0;
  for (int i = 0; i < samples; ++i) {
    Vec c{};
    for (int j = 0; j < sys.dim(); ++j) c[j] = unit_double(rng());
    CsVec s{};
    double norm = 0;
    for (int j = 0; j < sys.cs_dim(); ++j) {
      s[j] = gauss(rng);
      norm += s[j] * s[j];
    }
    const double len = delta * unit_double(rng()) / std::sqrt(norm);
    for (int j = 0; j < sys.cs_dim(); ++j) s[j] *= len;
    TorusPoint x(sys.dim(), c);
    TorusPoint y = sys.cs_point(x, s);
    for (int k = 0; k <= n_max; ++k) {
      worst = std::max(worst, sys.metric(x, y));
      x = sys.map(x);
      y = sys.map(y);
    }
  }
  return worst;
}

}  // namespace phm
