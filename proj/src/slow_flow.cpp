#include <algorithm>
#include <cmath>
#include <numbers>

#include "phm/catalog.hpp"
#include "phm/errors.hpp"

namespace phm {

SlowFlowProfile power_profile(double t0, double exponent, std::string name) {
  if (!(t0 > 0 && t0 < 0.25)) throw ConfigError("slow-down radius t0 must lie in (0, 0.25)");
  if (!(exponent > 0)) throw ConfigError("profile exponent must be positive");
  SlowFlowProfile p;
  p.name = std::move(name);
  p.t0 = t0;
  p.kappa = [t0, exponent](double t) {
    if (t <= 0) return 0.0;
    if (t >= t0) return 1.0;
    double core = std::pow(t / t0, exponent);
    double lo = 0.9 * t0;
    if (t <= lo) return core;
    double s = (t - lo) / (t0 - lo);
    double w = s * s * (3 - 2 * s);
    return (1 - w) * core + w;
  };
  return p;
}

SlowFlowProfile sqrt_profile(double t0) { return power_profile(t0, 0.5, "sqrt"); }
SlowFlowProfile cuberoot_profile(double t0) { return power_profile(t0, 1.0 / 3.0, "cuberoot"); }

ProfileCheck validate_profile(const SlowFlowProfile& profile) {
  if (!profile.kappa) throw ConfigError("profile has no kappa");
  const double t0 = profile.t0;
  const auto& k = profile.kappa;
  if (std::abs(k(0.0)) > 1e-12) throw ConfigError("profile: kappa(0) must vanish");
  for (int i = 1; i < 1000; ++i) {
    double t = t0 * i / 1000.0;
    double v = k(t);
    if (!(v > 0)) throw ConfigError("profile: kappa must be positive on (0, t0)");
    if (v > 1 + 1e-12) throw ConfigError("profile: kappa must not exceed 1");
  }
  for (int i = 0; i <= 1000; ++i) {
    double t = t0 + (1.0 - t0) * i / 1000.0;
    if (std::abs(k(t) - 1.0) > 1e-12) throw ConfigError("profile: kappa must equal 1 beyond t0");
  }
  // Integral of 1/kappa over dyadic shells [2^-j-1, 2^-j]; finiteness shows up as
  // geometric decay of the shell contributions.
  auto simpson = [&](double a, double b) {
    const int m = 64;
    double h = (b - a) / m, s = 1 / k(a) + 1 / k(b);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4 : 2) / k(a + i * h);
    return s * h / 3;
  };
  ProfileCheck out;
  std::vector<double> shells;
  for (int j = 0; j < 60; ++j) shells.push_back(simpson(std::ldexp(1.0, -j - 1), std::ldexp(1.0, -j)));
  double ratio = 0;
  for (int j = 40; j < 59; ++j) ratio = std::max(ratio, shells[j + 1] / shells[j]);
  if (!(ratio < 0.95)) throw ConfigError("profile: integral of 1/kappa does not converge at 0");
  double total = 0;
  for (double s : shells) total += s;
  total += shells.back() * ratio / (1 - ratio);
  out.integral = total;
  out.tail_ratio = ratio;
  return out;
}

SlowFlow::SlowFlow(SlowFlowProfile profile, double alpha, double beta, TorusPoint p)
    : profile_(std::move(profile)), alpha_(alpha), beta_(beta), p_(p) {
  if (p_.dim != 2) throw ConfigError("slowed point must lie on T^2");
  if (!(std::abs(beta_) > 1e-6) || !std::isfinite(alpha_) || !std::isfinite(beta_))
    throw ConfigError("flow direction needs finite alpha and nonzero beta");
  if (!profile_.kappa) throw ConfigError("profile has no kappa");
}

double SlowFlow::psi(const TorusPoint& y) const {
  Vec v = delta(p_, y);
  double a = v[0] - v[1] * alpha_ / beta_;
  double b = v[1] / beta_;
  double rho = std::hypot(a, b);
  return rho < profile_.t0 ? profile_.kappa(rho) : 1.0;
}

std::vector<std::pair<double, double>> SlowFlow::crossings(const TorusPoint& y, double s_lo, double s_hi) const {
  std::vector<std::pair<double, double>> out;
  Vec v = delta(p_, y);
  const double t0 = profile_.t0;
  const int reach = 2 + static_cast<int>(std::ceil(std::max(std::abs(s_lo), std::abs(s_hi)) *
                                                   std::max(std::abs(alpha_), std::abs(beta_))));
  for (int m = -reach; m <= reach; ++m)
    for (int n = -reach; n <= reach; ++n) {
      double wx = v[0] + m, wy = v[1] + n;
      double a = wx - wy * alpha_ / beta_;
      if (std::abs(a) >= t0) continue;
      double b0 = wy / beta_;
      double half = std::sqrt(t0 * t0 - a * a);
      double s_in = -half - b0, s_out = half - b0;
      if (s_out <= s_lo || s_in >= s_hi) continue;
      out.emplace_back(s_in, s_out);
    }
  std::sort(out.begin(), out.end());
  return out;
}

TorusPoint SlowFlow::flow(const TorusPoint& y, double time, double step) const {
  if (y.dim != 2) throw DomainError("slow flow acts on T^2");
  if (norm(delta(p_, y), 2) == 0.0) return p_;
  if (time == 0) return y;
  const double sign = time > 0 ? 1.0 : -1.0;
  const double duration = std::abs(time);
  const double dx = sign * alpha_, dy = sign * beta_;
  auto point_at = [&](double s) {
    Vec w{};
    w[0] = y.x[0] + s * dx;
    w[1] = y.x[1] + s * dy;
    return TorusPoint(2, w);
  };
  auto speed = [&](double s) { return psi(point_at(s)); };

  // crossings() is phrased for the direction (alpha, beta); mirror for backward time.
  std::vector<std::pair<double, double>> cross;
  if (sign > 0) {
    cross = crossings(y, -1e-12, duration + 1e-12);
  } else {
    // Along -(alpha,beta) the parameter s corresponds to -s forward.
    auto fwd = crossings(y, -duration - 1e-12, 1e-12);
    for (auto [a, b] : fwd) cross.emplace_back(-b, -a);
    std::sort(cross.begin(), cross.end());
  }

  double s = 0, left = duration;
  long steps = 0;
  const long max_steps = 50000000;
  double h_last = step;
  for (const auto& [s_in, s_out] : cross) {
    if (left <= 0) break;
    if (s_out <= s) continue;
    if (s < s_in) {
      double gap = s_in - s;
      if (gap >= left) {
        s += left;
        left = 0;
        break;
      }
      s = s_in;
      left -= gap;
    }
    while (left > 0 && s < s_out) {
      double h = step;
      double v0 = speed(s);
      // Step shrinks with the speed: plain halving below psi=0.05 leaves ~1e-8 errors
      // on orbits grazing the sqrt singularity.
      while (v0 < h / step && h > step / 1024) h *= 0.5;
      if (h > left) h = left;
      double k1 = v0;
      double k2 = speed(s + 0.5 * h * k1);
      double k3 = speed(s + 0.5 * h * k2);
      double k4 = speed(s + h * k3);
      s += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6;
      left -= h;
      h_last = h;
      if (++steps > max_steps || !std::isfinite(s))
        throw IntegrationError("slow flow integration did not finish", steps, h_last, duration - left);
    }
  }
  if (left > 0) s += left;
  return point_at(s);
}

std::vector<double> SlowFlow::invariant_bin_masses(int bins, int sub) const {
  if (bins < 1 || sub < 1) throw DomainError("bin counts must be positive");
  const double t0 = profile_.t0;
  const double hx = t0 * (1 + std::abs(alpha_)) + 1.0 / bins;
  const double hy = t0 * std::abs(beta_) + 1.0 / bins;
  std::vector<double> mass(static_cast<std::size_t>(bins) * bins);
  const double cell = 1.0 / bins;
  double total = 0;
  for (int i = 0; i < bins; ++i)
    for (int j = 0; j < bins; ++j) {
      TorusPoint c{(i + 0.5) * cell, (j + 0.5) * cell};
      Vec d = delta(p_, c);
      double m;
      if (std::abs(d[0]) > hx || std::abs(d[1]) > hy) {
        m = cell * cell;
      } else {
        double acc = 0;
        for (int a = 0; a < sub; ++a)
          for (int b = 0; b < sub; ++b) {
            TorusPoint q{(i + (a + 0.5) / sub) * cell, (j + (b + 0.5) / sub) * cell};
            acc += 1.0 / psi(q);
          }
        m = acc * cell * cell / (static_cast<double>(sub) * sub);
      }
      mass[static_cast<std::size_t>(i) + static_cast<std::size_t>(j) * bins] = m;
      total += m;
    }
  for (double& m : mass) m /= total;
  return mass;
}

}  // namespace phm
