#include "phm/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "phm/errors.hpp"

namespace phm {

namespace {

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  double m = *std::max_element(v.begin(), v.end());
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DomainError("line fit needs at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw DomainError("line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = y[i] - (f.intercept + f.slope * x[i]);
    ss += e * e;
  }
  f.rms = std::sqrt(ss / n);
  f.slope_error = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
  return f;
}

PartitionSum partition_sum(const System& sys, const Potential& phi, const std::vector<TorusPoint>& pts, int n,
                           double r) {
  std::vector<double> terms;
  terms.reserve(pts.size());
  for (const TorusPoint& p : pts) terms.push_back(birkhoff_sum(sys, phi, p, n));
  return PartitionSum{log_sum_exp(terms), pts.size(), n, r};
}

PartitionSum partition_sum(const System& sys, const Potential& phi, const LeafSegment& seg, int n, double r,
                           SumMode mode) {
  SeparatedSet set = mode == SumMode::Separated ? separated_set(sys, seg, n, r) : spanning_set(sys, seg, n, r);
  return partition_sum(sys, phi, set.points(sys), n, r);
}

PressureEstimate estimate_pressure(const System& sys, const Potential& phi, const TorusPoint& x,
                                   const PressureOptions& opt) {
  if (opt.n_min < 1 || opt.n_max <= opt.n_min) throw DomainError("pressure window needs 1 <= n_min < n_max");
  if (!(opt.r > 0) || !(opt.half_length > 0)) throw DomainError("pressure radius and segment must be positive");
  if (opt.half_length > sys.constants().tau) throw DomainError("segment exceeds the local unstable chart");
  LeafSegment seg{x, -opt.half_length, opt.half_length};

  auto slope_at = [&](double r, PressureEstimate* fill) {
    std::vector<double> ns, lz;
    for (int n = opt.n_min; n <= opt.n_max; ++n) {
      PartitionSum z = partition_sum(sys, phi, seg, n, r, opt.mode);
      if (!std::isfinite(z.log_value)) throw NumericalError("partition sum is not finite");
      ns.push_back(n);
      lz.push_back(z.log_value);
      if (fill) {
        fill->orders.push_back(n);
        fill->log_z.push_back(z.log_value);
        fill->sizes.push_back(z.cardinality);
      }
    }
    return fit_line(ns, lz);
  };

  PressureEstimate est;
  est.r = opt.r;
  est.mode = opt.mode;
  std::ostringstream dom;
  dom << "leaf segment [-" << opt.half_length << ", " << opt.half_length << "]";
  est.domain = dom.str();
  LineFit main = slope_at(opt.r, &est);
  est.value = main.slope;
  est.intercept = main.intercept;
  est.residual = main.rms;
  double lo = main.slope, hi = main.slope;
  for (double rr : opt.spread_radii) {
    double s = std::abs(rr - opt.r) < 1e-15 ? main.slope : slope_at(rr, nullptr).slope;
    est.radius_slopes.push_back(s);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  est.spread = hi - lo;
  est.reliable = est.residual < opt.residual_threshold && est.spread < opt.spread_threshold;
  return est;
}

SubmultiplicativeCheck check_submultiplicative(const System& sys, const Potential& phi, const TorusPoint& x, int k,
                                               int l, double r, double r1, double q_u, int samples,
                                               std::uint64_t seed) {
  if (k < 1 || l < 1) throw DomainError("submultiplicativity needs k, l >= 1");
  auto z_at = [&](const TorusPoint& b, int n) {
    return std::exp(partition_sum(sys, phi, LeafSegment{b, -r1, r1}, n, r).log_value);
  };
  SubmultiplicativeCheck out;
  out.z_sum = z_at(x, k + l);
  out.z_first = z_at(x, k);

  std::vector<TorusPoint> bases{x};
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    Vec c{};
    for (int i = 0; i < sys.dim(); ++i) c[i] = unit_double(rng());
    bases.emplace_back(sys.dim(), c);
  }
  SeparatedSet e = separated_set(sys, LeafSegment{x, -r1, r1}, k + l, r);
  const std::size_t stride = std::max<std::size_t>(1, e.size() / 8);
  for (std::size_t i = 0; i < e.size(); i += stride) bases.push_back(iterate(sys, e.domain.point(sys, e.params[i]), k));
  for (const TorusPoint& b : bases) out.z_sup = std::max(out.z_sup, z_at(b, l));

  out.ratio = out.z_sum / (out.z_first * out.z_sup);
  out.bound = std::exp(q_u);
  std::ostringstream rs;
  rs << "k=" << k << " l=" << l << " r=" << r << " r1=" << r1 << " bases=" << bases.size();
  out.bounds = DiagnosticBounds{"submultiplicative ratio", out.ratio, out.ratio, rs.str(),
                                out.ratio <= out.bound * (1 + 1e-12)};
  return out;
}

UniformityCheck check_uniformity(const System& sys, const Potential& phi, const std::vector<TorusPoint>& bases,
                                 const std::vector<int>& orders, double r, double r1, double pressure) {
  if (bases.empty() || orders.empty()) throw DomainError("uniformity check needs bases and orders");
  UniformityCheck out;
  out.orders = orders;
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (int n : orders) {
    double mn = std::numeric_limits<double>::infinity(), mx = 0;
    for (const TorusPoint& b : bases) {
      double lz = partition_sum(sys, phi, LeafSegment{b, -r1, r1}, n, r).log_value;
      double v = std::exp(lz - n * pressure);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    out.min_normalized.push_back(mn);
    out.max_normalized.push_back(mx);
    out.cross_ratio.push_back(mx / mn);
    lo = std::min(lo, mn);
    hi = std::max(hi, mx);
  }
  if (orders.size() >= 2) {
    std::vector<double> ns(orders.begin(), orders.end()), lr;
    for (double c : out.cross_ratio) lr.push_back(std::log(c));
    out.trend_slope = fit_line(ns, lr).slope;
  }
  std::ostringstream rs;
  rs << "bases=" << bases.size() << " n=[" << orders.front() << "," << orders.back() << "] r=" << r << " r1=" << r1;
  out.bounds = DiagnosticBounds{"Z_n exp(-nP) over bases", lo, hi, rs.str(), std::abs(out.trend_slope) <= 0.02};
  return out;
}

SandwichCheck check_span_sep(const System& sys, const Potential& phi, const LeafSegment& seg, int n, double r,
                             double q_u) {
  SandwichCheck out;
  out.z_span = std::exp(partition_sum(sys, phi, seg, n, r, SumMode::Spanning).log_value);
  out.z_sep = std::exp(partition_sum(sys, phi, seg, n, r, SumMode::Separated).log_value);
  out.z_span_half = std::exp(partition_sum(sys, phi, seg, n, r / 2, SumMode::Spanning).log_value);
  out.bound = std::exp(q_u) * out.z_span_half;
  out.passed = out.z_span <= out.z_sep * (1 + 1e-12) && out.z_sep <= out.bound * (1 + 1e-12);
  return out;
}

PressureEstimate estimate_rectangle_pressure(const System& sys, const Potential& phi, const TorusPoint& x,
                                             int n_min, int n_max, double r, double du, double dcs) {
  if (n_min < 1 || n_max <= n_min) throw DomainError("pressure window needs 1 <= n_min < n_max");
  const int dc = sys.cs_dim();
  const double cs_step = r / 2;
  const int cs_count = static_cast<int>(std::floor(2 * dcs / cs_step)) + 1;
  PressureEstimate est;
  est.r = r;
  std::ostringstream dom;
  dom << "rectangle u=" << du << " cs=" << dcs;
  est.domain = dom.str();
  std::vector<double> ns;
  for (int n = n_min; n <= n_max; ++n) {
    BowenBallU b = u_bowen_ball(sys, x, n, r);
    const double uh = std::min(-b.lo, b.hi) / 4;
    const long u_count = static_cast<long>(std::floor(2 * du / uh)) + 1;
    std::vector<TorusPoint> cand;
    long total = u_count;
    for (int i = 0; i < dc; ++i) total *= cs_count;
    if (total > 20000000L) throw DomainError("rectangle candidate grid too large");
    cand.reserve(total);
    std::vector<int> idx(dc, 0);
    for (;;) {
      LocalCoords c;
      for (int i = 0; i < dc; ++i) c.cs[i] = -dcs + idx[i] * cs_step;
      for (long j = 0; j < u_count; ++j) {
        c.u = -du + static_cast<double>(j) * uh;
        cand.push_back(sys.local_point(x, c));
      }
      int d = 0;
      while (d < dc && ++idx[d] == cs_count) idx[d++] = 0;
      if (d == dc) break;
    }
    std::vector<TorusPoint> set = separated_subset(sys, cand, n, r);
    PartitionSum z = partition_sum(sys, phi, set, n, r);
    ns.push_back(n);
    est.orders.push_back(n);
    est.log_z.push_back(z.log_value);
    est.sizes.push_back(z.cardinality);
  }
  LineFit f = fit_line(ns, est.log_z);
  est.value = f.slope;
  est.intercept = f.intercept;
  est.residual = f.rms;
  est.reliable = true;
  return est;
}

}  // namespace phm
