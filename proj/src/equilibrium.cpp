#include "phm/equilibrium.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "phm/errors.hpp"

namespace phm {

double leaf_scale(const System& sys, const TorusPoint& base, int k) {
  auto rate = sys.leaf_expansion();
  if (!rate) throw DomainError("pushforward needs a uniform leaf expansion rate");
  const double s = 1e-3 * std::pow(*rate, -std::max(k, 0));
  TorusPoint a = iterate(sys, base, k);
  TorusPoint b = iterate(sys, sys.unstable_curve_point(base, s), k);
  double u = sys.local_coords(a, b).u;
  return (u >= 0 ? 1.0 : -1.0) * std::pow(*rate, k);
}

double chart_jacobian(const System& sys) {
  const int d = sys.dim();
  Eigen::MatrixXd j(d, d);
  for (int i = 0; i < d; ++i) j(i, 0) = sys.unstable_direction()[i];
  for (int k = 0; k < d - 1; ++k)
    for (int i = 0; i < d; ++i) j(i, k + 1) = sys.cs_basis()[k][i];
  return std::abs(j.determinant());
}

LeafMeasure pushforward(const System& sys, const Potential& phi, const LeafMeasure& m, int k, double pressure) {
  if (k < 0) throw DomainError("pushforward order must be nonnegative");
  if (k == 0) return m;
  const double scale = leaf_scale(sys, m.base, k);
  LeafMeasure out = m;
  out.base = iterate(sys, m.base, k);
  out.lo = std::min(scale * m.lo, scale * m.hi);
  out.hi = std::max(scale * m.lo, scale * m.hi);
  out.params.resize(m.params.size());
  out.weights.resize(m.params.size());
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    double s = birkhoff_sum(sys, phi, sys.unstable_curve_point(m.base, m.params[i]), k);
    out.params[i] = scale * m.params[i];
    out.weights[i] = m.weights[i] * std::exp(k * pressure - s);
  }
  if (scale < 0) {
    std::reverse(out.params.begin(), out.params.end());
    std::reverse(out.weights.begin(), out.weights.end());
  }
  out.rebuild_prefix();
  return out;
}

ScalingCheck scaling_check(const System& sys, const Potential& phi, const TorusPoint& x, int k, double r, int N,
                           double pressure, int pieces) {
  if (k < 1 || pieces < 1) throw DomainError("scaling check needs k >= 1 and at least one piece");
  const double tau = sys.constants().tau;
  LeafMeasure src = reference_measure(sys, phi, x, r, N, pressure, tau, true);
  TorusPoint y = iterate(sys, x, k);
  LeafMeasure img = reference_measure(sys, phi, y, r, N, pressure, tau, true);
  const double scale = leaf_scale(sys, x, k);
  const double half = tau / std::abs(scale);

  ScalingCheck out;
  for (int i = 0; i < pieces; ++i)
    out.segments.emplace_back(-half + 2 * half * i / pieces, -half + 2 * half * (i + 1) / pieces);
  out.segments.emplace_back(-half, half);

  std::vector<double> density(src.params.size());
  for (std::size_t i = 0; i < src.params.size(); ++i)
    density[i] = std::exp(k * pressure - birkhoff_sum(sys, phi, sys.unstable_curve_point(x, src.params[i]), k));

  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (auto [a, b] : out.segments) {
    double ia = scale * a, ib = scale * b;
    double lhs = img.mass_in(std::min(ia, ib), std::max(ia, ib));
    double rhs = 0;
    for (std::size_t i = 0; i < src.params.size(); ++i)
      if (src.params[i] >= a && src.params[i] <= b) rhs += src.weights[i] * density[i];
    double err = (lhs == 0 && rhs == 0) ? 0.0 : std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300);
    out.image_mass.push_back(lhs);
    out.predicted.push_back(rhs);
    out.relative_error.push_back(err);
    lo = std::min(lo, err);
    hi = std::max(hi, err);
  }
  std::ostringstream rs;
  rs << "k=" << k << " N=" << N << " r=" << r << " pieces=" << pieces;
  out.bounds = DiagnosticBounds{"scaling relative error", lo, hi, rs.str(), hi < 0.05};
  return out;
}

std::vector<PhaseMeasure> evolve_average(const System& sys, const LeafMeasure& m, int n_max, int bins,
                                         std::size_t atom_budget, bool keep_all) {
  if (n_max < 2) throw DomainError("evolve_average needs n_max >= 2");
  if (bins <= 0) bins = default_bins(sys.dim());
  const double mass = m.mass();
  if (!(mass > 0)) throw NumericalError("reference measure has zero mass");

  std::vector<TorusPoint> atoms;
  std::vector<double> w;
  atoms.reserve(m.params.size());
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    atoms.push_back(sys.unstable_curve_point(m.base, m.params[i]));
    w.push_back(m.weights[i] / mass);
  }

  auto merge = [&]() {
    // deterministic: bins in index order, one atom per bin at the weighted centroid
    PhaseMeasure grid(sys.dim(), bins);
    std::map<std::size_t, std::pair<std::size_t, std::pair<Vec, double>>> acc;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      std::size_t b = grid.index_of(atoms[i]);
      auto it = acc.find(b);
      if (it == acc.end()) it = acc.emplace(b, std::make_pair(i, std::make_pair(Vec{}, 0.0))).first;
      Vec d = delta(atoms[it->second.first], atoms[i]);
      auto& [sum, tw] = it->second.second;
      for (int c = 0; c < sys.dim(); ++c) sum[c] += w[i] * d[c];
      tw += w[i];
    }
    std::vector<TorusPoint> na;
    std::vector<double> nw;
    for (auto& [b, entry] : acc) {
      auto& [sum, tw] = entry.second;
      na.push_back(translate(atoms[entry.first], scaled(sum, 1.0 / tw)));
      nw.push_back(tw);
    }
    atoms.swap(na);
    w.swap(nw);
  };
  if (atoms.size() > atom_budget) merge();

  std::vector<PhaseMeasure> out;
  PhaseMeasure sum(sys.dim(), bins);
  for (int k = 0; k < n_max; ++k) {
    for (std::size_t i = 0; i < atoms.size(); ++i) sum.add(atoms[i], w[i]);
    if (!keep_all && k + 1 < n_max) {
      for (TorusPoint& a : atoms) a = sys.map(a);
      continue;
    }
    PhaseMeasure mu = sum;
    for (double& v : mu.masses()) v /= (k + 1);
    mu.provenance.system = sys.id();
    mu.provenance.base = m.base;
    mu.provenance.n = k + 1;
    out.push_back(std::move(mu));
    if (k + 1 < n_max)
      for (TorusPoint& a : atoms) a = sys.map(a);
  }
  return out;
}

std::vector<PhaseMeasure> evolve_average(const System& sys, const Potential& phi, const TorusPoint& x,
                                         double pressure, const EvolveOptions& opt) {
  LeafMeasure m = reference_measure(sys, phi, x, opt.r, opt.N, pressure, sys.constants().tau, true);
  std::vector<PhaseMeasure> seq = evolve_average(sys, m, opt.n_max, opt.bins, opt.atom_budget, opt.keep_all);
  for (PhaseMeasure& mu : seq) mu.provenance.potential = phi.label();
  return seq;
}

ConvergenceProfile convergence_profile(const std::vector<PhaseMeasure>& seq, int from) {
  if (seq.size() < 2) throw DomainError("convergence profile needs at least two measures");
  ConvergenceProfile out;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) out.successive.push_back(total_variation(seq[i], seq[i + 1]));
  for (const PhaseMeasure& mu : seq) out.to_final.push_back(total_variation(mu, seq.back()));
  int bad = 0, steps = 0;
  for (std::size_t n = std::max(from, 1); n + 1 < out.to_final.size(); ++n) {
    ++steps;
    if (out.to_final[n] > out.to_final[n - 1]) ++bad;
  }
  out.nonmonotone_fraction = steps ? static_cast<double>(bad) / steps : 0.0;
  return out;
}

GibbsRatio gibbs_ratio(const System& sys, const Potential& phi, const PhaseMeasure& mu, double pressure,
                       const GibbsOptions& opt) {
  if (opt.n_min < 1 || opt.n_max < opt.n_min || opt.samples < 1 || opt.qmc_points < 16)
    throw DomainError("bad Gibbs ratio ranges");
  if (mu.dim() != sys.dim()) throw DomainError("measure and system dimensions differ");
  const int d = sys.dim();
  const int mb = d > 2 ? 64 : 1;
  const int ma = std::max(1, opt.qmc_points / mb);
  const double jac = chart_jacobian(sys);

  std::vector<std::array<double, 2>> design_a(ma);
  std::vector<std::array<double, 2>> design_b(mb);
  for (int i = 0; i < ma; ++i) {
    auto h = halton(i + 1, 2);
    design_a[i] = {2 * h[0] - 1, 2 * h[1] - 1};
  }
  for (int i = 0; i < mb; ++i) {
    auto h = halton(i + 1, 4);
    design_b[i] = {2 * h[2] - 1, 2 * h[3] - 1};
  }

  GibbsRatio out;
  const int orders = opt.n_max - opt.n_min + 1;
  out.min_q.assign(orders, std::numeric_limits<double>::infinity());
  out.max_q.assign(orders, 0.0);
  std::vector<double> sum_log(orders, 0.0);
  std::vector<int> count(orders, 0);
  double qmin = std::numeric_limits<double>::infinity(), qmax = 0;

  std::vector<TorusPoint> xs = sample_points(mu, opt.samples, opt.seed);
  for (const TorusPoint& x : xs) {
    std::vector<double> s = birkhoff_prefix(sys, phi, x, opt.n_max);
    std::vector<TorusPoint> xo = orbit(sys, x, opt.n_max);
    for (int n = opt.n_min; n <= opt.n_max; ++n) {
      BowenBallU b = u_bowen_ball(sys, x, n, opt.r);
      const double hu = 2 * std::max(-b.lo, b.hi), hc = 2 * opt.r;
      double acc = 0;
      std::unordered_set<std::size_t> hit;
      for (int jb = 0; jb < mb; ++jb) {
        for (int ja = 0; ja < ma; ++ja) {
          LocalCoords c;
          c.u = hu * design_a[ja][0];
          c.cs[0] = hc * design_a[ja][1];
          for (int k = 1; k < d - 1; ++k) c.cs[k] = hc * design_b[jb][k - 1];
          TorusPoint y = sys.local_point(x, c);
          TorusPoint z = y;
          bool inside = true;
          for (int k = 0; k < n && inside; ++k) {
            if (k > 0) z = sys.map(z);
            inside = sys.metric(xo[k], z) < opt.r;
          }
          if (!inside) continue;
          double dens = mu.density(y);
          if (dens > 0) hit.insert(mu.index_of(y));
          acc += dens;
        }
      }
      const double volume = 2 * hu * std::pow(2 * hc, d - 1) * jac;
      const double mass = volume * acc / (static_cast<double>(ma) * mb);
      if (mass <= 0 || static_cast<int>(hit.size()) < opt.min_bins) {
        ++out.excluded;
        continue;
      }
      ++out.accepted;
      double q = mass / std::exp(-n * pressure + s[n - 1]);
      const int i = n - opt.n_min;
      out.min_q[i] = std::min(out.min_q[i], q);
      out.max_q[i] = std::max(out.max_q[i], q);
      sum_log[i] += std::log(q);
      ++count[i];
      qmin = std::min(qmin, q);
      qmax = std::max(qmax, q);
    }
  }
  std::vector<double> ns, ls;
  for (int i = 0; i < orders; ++i) {
    out.orders.push_back(opt.n_min + i);
    out.mean_log_q.push_back(count[i] ? sum_log[i] / count[i] : std::numeric_limits<double>::quiet_NaN());
    if (count[i]) {
      ns.push_back(opt.n_min + i);
      ls.push_back(out.mean_log_q.back());
    }
  }
  if (ns.size() >= 2) out.trend_slope = fit_line(ns, ls).slope;
  out.spread = out.accepted ? qmax / qmin : std::numeric_limits<double>::infinity();
  std::ostringstream rs;
  rs << "n=[" << opt.n_min << "," << opt.n_max << "] r=" << opt.r << " samples=" << opt.samples
     << " accepted=" << out.accepted << " excluded=" << out.excluded << " trend=" << out.trend_slope;
  out.bounds = DiagnosticBounds{"Gibbs ratio", out.accepted ? qmin : 0.0, qmax, rs.str(),
                                ns.size() >= 2 && out.spread < opt.spread_threshold &&
                                    std::abs(out.trend_slope) < opt.trend_threshold};
  return out;
}

NegativeControlOracle negative_control_oracle(const SlowedProduct& sys, int bins) {
  if (bins < 2) throw DomainError("oracle grid needs at least two bins per axis");
  std::vector<double> fiber = sys.flow().invariant_bin_masses(bins);
  const TorusPoint& p = sys.flow().fixed_point();
  const int pi = std::min(bins - 1, static_cast<int>(p.x[0] * bins));
  const int pj = std::min(bins - 1, static_cast<int>(p.x[1] * bins));
  NegativeControlOracle out{0, 0, fiber[pi + pj * bins], PhaseMeasure(4, bins), PhaseMeasure(4, bins)};
  const double base = 1.0 / (static_cast<double>(bins) * bins);
  for (std::size_t idx = 0; idx < out.smooth.size(); ++idx) {
    auto c = out.smooth.cell(idx);
    out.smooth.masses()[idx] = base * fiber[c[2] + c[3] * bins];
    out.singular.masses()[idx] = (c[2] == pi && c[3] == pj) ? base : 0.0;
  }
  out.gap = total_variation(out.smooth, out.singular);
  out.threshold = 0.5 * out.gap;
  return out;
}

}  // namespace phm
