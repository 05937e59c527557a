#include "phm/potential.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "phm/errors.hpp"

namespace phm {

Potential::Potential(std::string label, std::function<double(const TorusPoint&)> f,
                     std::optional<double> constant)
    : label_(std::move(label)), f_(std::move(f)), constant_(constant) {}

Potential zero_potential() {
  return Potential("zero", [](const TorusPoint&) { return 0.0; }, 0.0);
}

Potential constant_potential(double c) {
  std::ostringstream os;
  os << "constant(" << c << ")";
  return Potential(os.str(), [c](const TorusPoint&) { return c; }, c);
}

Potential trig_potential(double offset, double amplitude, const std::vector<int>& k) {
  if (k.empty() || k.size() > kMaxDim) throw ConfigError("trig potential needs 1..4 wave numbers");
  std::array<int, kMaxDim> kk{};
  for (std::size_t i = 0; i < k.size(); ++i) kk[i] = k[i];
  const int n = static_cast<int>(k.size());
  std::ostringstream os;
  os << "trig(" << offset << "," << amplitude << ")";
  return Potential(os.str(), [=](const TorusPoint& x) {
    if (x.dim < n) throw DomainError("trig potential wave vector longer than the point dimension");
    double phase = 0;
    for (int i = 0; i < n; ++i) phase += kk[i] * x.x[i];
    return offset + amplitude * std::cos(2 * std::numbers::pi * phase);
  });
}

Potential grid_potential(int dim, int bins, std::vector<double> values) {
  if (dim < 1 || dim > kMaxDim || bins < 1) throw ConfigError("grid potential shape out of range");
  std::size_t expect = 1;
  for (int i = 0; i < dim; ++i) expect *= static_cast<std::size_t>(bins);
  if (values.size() != expect) throw ConfigError("grid potential needs bins^dim values");
  for (double v : values)
    if (!std::isfinite(v)) throw ConfigError("grid potential values must be finite");
  auto table = std::make_shared<const std::vector<double>>(std::move(values));
  return Potential("grid", [=](const TorusPoint& x) {
    if (x.dim != dim) throw DomainError("grid potential dimension mismatch");
    std::array<int, kMaxDim> i0{};
    std::array<double, kMaxDim> frac{};
    for (int d = 0; d < dim; ++d) {
      double s = x.x[d] * bins;
      double f = std::floor(s);
      i0[d] = static_cast<int>(f) % bins;
      frac[d] = s - f;
    }
    double acc = 0;
    for (int corner = 0; corner < (1 << dim); ++corner) {
      double w = 1;
      std::size_t idx = 0, stride = 1;
      for (int d = 0; d < dim; ++d) {
        int bit = (corner >> d) & 1;
        w *= bit ? frac[d] : 1 - frac[d];
        idx += static_cast<std::size_t>((i0[d] + bit) % bins) * stride;
        stride *= static_cast<std::size_t>(bins);
      }
      acc += w * (*table)[idx];
    }
    return acc;
  });
}

Potential shifted(const Potential& phi, double c) {
  std::optional<double> k;
  if (phi.constant()) k = *phi.constant() + c;
  std::ostringstream os;
  os << phi.label() << "+" << c;
  return Potential(os.str(), [phi, c](const TorusPoint& x) { return phi(x) + c; }, k);
}

Potential geometric_potential(std::shared_ptr<const System> sys, double q) {
  std::optional<double> k;
  if (sys->leaf_expansion()) k = -q * std::log(*sys->leaf_expansion());
  std::ostringstream os;
  os << "geometric(q=" << q << ")";
  return Potential(os.str(), [sys, q](const TorusPoint& x) { return -q * sys->log_unstable_jacobian(x); }, k);
}

double birkhoff_sum(const System& sys, const Potential& phi, const TorusPoint& x, int n) {
  if (n < 0) throw DomainError("Birkhoff sum needs n >= 0");
  double s = 0;
  TorusPoint y = x;
  for (int k = 0; k < n; ++k) {
    if (k > 0) y = sys.map(y);
    s += phi(y);
  }
  return s;
}

std::vector<double> birkhoff_prefix(const System& sys, const Potential& phi, const TorusPoint& x, int n) {
  std::vector<double> out(n);
  double s = 0;
  TorusPoint y = x;
  for (int k = 0; k < n; ++k) {
    if (k > 0) y = sys.map(y);
    s += phi(y);
    out[k] = s;
  }
  return out;
}

}  // namespace phm
