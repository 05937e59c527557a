#include "phm/caratheodory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <sstream>

#include "phm/errors.hpp"

namespace phm {

CoverProblem::CoverProblem(const System& sys, const Potential& phi, const LeafSegment& seg,
                           std::vector<std::pair<double, double>> targets, double r, int n_min, int n_max)
    : seg_(seg), r_(r), n_min_(n_min), n_max_(n_max), constant_(phi.constant()) {
  if (n_min < 1 || n_max < n_min) throw DomainError("cover orders need 1 <= n_min <= n_max");
  if (!(r > 0)) throw DomainError("cover radius must be positive");
  if (!(seg.hi > seg.lo)) throw DomainError("cover segment must have positive length");
  std::vector<double> rho;
  for (int n = n_min; n <= n_max; ++n) {
    double ref = -1;
    for (double t : {seg.lo, 0.5 * (seg.lo + seg.hi), seg.hi}) {
      BowenBallU b = u_bowen_ball(sys, seg.point(sys, t), n, r);
      for (double v : {-b.lo, b.hi}) {
        if (ref < 0) ref = v;
        if (std::abs(v - ref) > 1e-9 * ref) throw DomainError("cover DP needs centre-independent u-Bowen radii");
      }
    }
    rho.push_back(ref);
  }
  h_ = rho.back() / 2;
  double count = std::floor(seg.length() / h_) + 1;
  if (count > 6e7) throw DomainError("certification grid too large; shorten the segment or lower the orders");
  m_ = static_cast<long>(count);
  for (double p : rho) reach_.push_back(static_cast<long>(std::ceil(p / h_)) - 1);

  for (auto [a, b] : targets) {
    if (a > b) std::swap(a, b);
    if (a < seg.lo - 1e-12 || b > seg.hi + 1e-12) throw DomainError("target interval leaves the segment");
    long i0 = std::max(0L, static_cast<long>(std::ceil((a - seg.lo) / h_ - 1e-9)));
    long i1 = std::min(m_ - 1, static_cast<long>(std::floor((b - seg.lo) / h_ + 1e-9)));
    for (long i = i0; i <= i1; ++i) target_.push_back(i);
  }
  std::sort(target_.begin(), target_.end());
  target_.erase(std::unique(target_.begin(), target_.end()), target_.end());

  if (!constant_) {
    const int rows = n_max - n_min + 1;
    sums_.assign(static_cast<std::size_t>(rows) * m_, 0.0);
    for (long i = 0; i < m_; ++i) {
      std::vector<double> s = birkhoff_prefix(sys, phi, seg.point(sys, center_param(i)), n_max);
      for (int n = n_min; n <= n_max; ++n) sums_[static_cast<std::size_t>(n - n_min) * m_ + i] = s[n - 1];
    }
  }
}

double CoverProblem::birkhoff(long i, int n) const {
  if (constant_) return n * *constant_;
  return sums_[static_cast<std::size_t>(n - n_min_) * m_ + i];
}

CoverSolution CoverProblem::solve(double alpha, int N, int span) const {
  if (span < 0 || N < n_min_ || N + span > n_max_) throw DomainError("cover orders outside the prepared range");
  CoverSolution out;
  out.alpha = alpha;
  out.N = N;
  out.span = span;
  out.target_points = target_.size();
  const std::size_t K = target_.size();
  if (K == 0) return out;

  struct Entry {
    double value;
    long last;    // last target index covered
    long first;   // first target index covered
    long center;
    int order;
    bool operator>(const Entry& o) const { return value > o.value; }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  std::vector<double> best(K + 1, 0.0);
  std::vector<Entry> parent(K + 1);

  for (std::size_t j = 0; j < K; ++j) {
    const long g = target_[j];
    const long g_prev = j > 0 ? target_[j - 1] : std::numeric_limits<long>::min() / 4;
    for (int n = N; n <= N + span; ++n) {
      const long m = reach_[n - n_min_];
      long i_lo = std::max({0L, g - m, g_prev + m + 1});
      long i_hi = std::min(m_ - 1, g + m);
      for (long i = i_lo; i <= i_hi; ++i) {
        long last = static_cast<long>(std::upper_bound(target_.begin(), target_.end(), i + m) - target_.begin()) - 1;
        double w = std::exp(birkhoff(i, n) - n * alpha);
        heap.push(Entry{best[j] + w, last, static_cast<long>(j), i, n});
      }
    }
    while (!heap.empty() && heap.top().last < static_cast<long>(j)) heap.pop();
    if (heap.empty()) throw NumericalError("target not coverable by the candidate balls");
    best[j + 1] = heap.top().value;
    parent[j + 1] = heap.top();
  }
  out.cost = best[K];
  for (long k = static_cast<long>(K); k > 0;) {
    out.balls.push_back(CoverBall{parent[k].center, parent[k].order});
    k = parent[k].first;
  }
  std::reverse(out.balls.begin(), out.balls.end());
  return out;
}

CoverSolution cover_cost(const System& sys, const Potential& phi, const LeafSegment& seg,
                         const std::vector<std::pair<double, double>>& targets, double alpha, int N, double r,
                         int span) {
  CoverProblem prob(sys, phi, seg, targets, r, N, N + span);
  return prob.solve(alpha, N, span);
}

CaratheodoryDimension caratheodory_dim(const System& sys, const Potential& phi, const TorusPoint& x,
                                       const DimensionOptions& opt) {
  if (opt.n_values < 3) throw DomainError("dimension trend needs at least three N values");
  const LeafSegment seg{x, -opt.half_length, opt.half_length};
  const int n_top = opt.N0 + opt.n_values - 1 + opt.span;
  CoverProblem prob(sys, phi, seg, {{seg.lo, seg.hi}}, opt.r, opt.N0, n_top);

  CaratheodoryDimension out;
  auto trend = [&](double alpha) {
    std::vector<double> ns, lc;
    for (int N = opt.N0; N < opt.N0 + opt.n_values; ++N) {
      ns.push_back(N);
      lc.push_back(std::log(prob.solve(alpha, N, opt.span).cost));
    }
    LineFit f = fit_line(ns, lc);
    out.steps.push_back(DimensionStep{alpha, f.slope, f.slope_error});
    return f;
  };

  // Initial bracket from the range of phi and the leaf expansion.
  std::mt19937_64 rng(0x5eed);
  double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
  for (int i = 0; i < 256; ++i) {
    Vec c{};
    for (int k = 0; k < sys.dim(); ++k) c[k] = unit_double(rng());
    double v = phi(TorusPoint(sys.dim(), c));
    pmin = std::min(pmin, v);
    pmax = std::max(pmax, v);
  }
  double growth = std::log(sys.leaf_expansion().value_or(sys.constants().chi));
  double lo = pmin - 0.5, hi = pmax + growth + 0.5;
  bool ok = false;
  for (int widen = 0; widen < 4 && !ok; ++widen) {
    ok = trend(lo).slope > 0 && trend(hi).slope < 0;
    if (!ok) {
      lo -= 1.0;
      hi += 1.0;
    }
  }
  if (!ok) throw NumericalError("cover-cost trend has no sign change in the search bracket");
  while (hi - lo > opt.tolerance) {
    double mid = 0.5 * (lo + hi);
    (trend(mid).slope > 0 ? lo : hi) = mid;
  }
  // An end whose trend is within its fit error could sit on either side of the root:
  // widen to the nearest evaluated alpha with a significant trend of the right sign.
  double wlo = -std::numeric_limits<double>::infinity(), whi = -wlo;
  for (const DimensionStep& s : out.steps) {
    if (s.slope > s.slope_error && s.alpha <= lo) wlo = std::max(wlo, s.alpha);
    if (s.slope < -s.slope_error && s.alpha >= hi) whi = std::min(whi, s.alpha);
  }
  if (!std::isfinite(wlo) || !std::isfinite(whi))
    throw NumericalError("cover-cost trend not significant anywhere in the search bracket");
  out.ambiguous = wlo < lo || whi > hi;
  out.lo = wlo;
  out.hi = whi;
  out.value = 0.5 * (wlo + whi);
  return out;
}

double LeafMeasure::mass_in(double a, double b) const {
  if (b < a) return 0.0;
  auto i = std::lower_bound(params.begin(), params.end(), a) - params.begin();
  auto j = std::upper_bound(params.begin(), params.end(), b) - params.begin();
  return prefix[j] - prefix[i];
}

void LeafMeasure::rebuild_prefix() {
  prefix.assign(weights.size() + 1, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) prefix[i + 1] = prefix[i] + weights[i];
}

LeafMeasure reference_measure(const System& sys, const Potential& phi, const TorusPoint& x, double r, int N,
                              PressureInput pressure, double radius, bool force) {
  if (!pressure.reliable && !force) throw DomainError("pressure estimate is flagged unreliable");
  if (radius <= 0) radius = sys.constants().tau;
  SeparatedSet set = separated_set(sys, LeafSegment{x, -radius, radius}, N, r);
  LeafMeasure m;
  m.base = x;
  m.lo = -radius;
  m.hi = radius;
  m.order = N;
  m.r = r;
  m.pressure = pressure.value;
  m.params = set.params;
  m.weights.reserve(set.size());
  for (double t : set.params) {
    double s = phi.constant() ? N * *phi.constant() : birkhoff_sum(sys, phi, sys.unstable_curve_point(x, t), N);
    m.weights.push_back(std::exp(-N * pressure.value + s));
  }
  m.rebuild_prefix();
  return m;
}

double reference_overlap(const System& sys, const Potential& phi, const TorusPoint& x, double s, double r, int N,
                         double pressure, double radius, int pieces) {
  if (radius <= 0) radius = sys.constants().tau;
  if (!(std::abs(s) < radius) || pieces < 1) throw DomainError("overlap needs |s| < radius and pieces >= 1");
  const TorusPoint y = sys.unstable_curve_point(x, s);
  LeafMeasure mx = reference_measure(sys, phi, x, r, N, pressure, radius, true);
  LeafMeasure my = reference_measure(sys, phi, y, r, N, pressure, radius, true);
  // common range in x-parameters
  const double lo = std::max(-radius, s - radius), hi = std::min(radius, s + radius);
  const double w = (hi - lo) / pieces;
  double worst = 1;
  for (int i = 0; i < pieces; ++i) {
    double a = lo + i * w, b = a + w;
    double p = mx.mass_in(a, b), q = my.mass_in(a - s, b - s);
    if (!(p > 0) || !(q > 0)) return std::numeric_limits<double>::infinity();
    worst = std::max({worst, p / q, q / p});
  }
  return worst;
}

DiagnosticBounds mass_diagnostics(const std::vector<LeafMeasure>& measures, double* k_hat) {
  if (measures.empty()) throw DomainError("mass diagnostics need at least one measure");
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const LeafMeasure& m : measures) {
    lo = std::min(lo, m.mass());
    hi = std::max(hi, m.mass());
  }
  double k = std::max(hi, 1.0 / lo);
  if (k_hat) *k_hat = k;
  std::ostringstream rs;
  rs << "measures=" << measures.size();
  return DiagnosticBounds{"reference mass", lo, hi, rs.str(), std::isfinite(k)};
}

DiagnosticBounds u_gibbs_bounds(const System& sys, const Potential& phi, const LeafMeasure& m, int n_min,
                                int n_max, int samples) {
  if (n_min < 1 || n_max < n_min || n_max > m.order) throw DomainError("u-Gibbs orders must lie in [1, N]");
  if (m.params.empty() || samples < 1) throw DomainError("u-Gibbs check needs atoms and samples");
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  const double margin = u_bowen_ball(sys, m.base, n_min, m.r).hi;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < m.params.size(); ++i)
    if (m.params[i] - margin > m.lo && m.params[i] + margin < m.hi) idx.push_back(i);
  if (idx.empty()) throw DomainError("leaf measure too short for the u-Gibbs window");
  const std::size_t stride = std::max<std::size_t>(1, idx.size() / samples);
  for (std::size_t k = 0; k < idx.size(); k += stride) {
    double t = m.params[idx[k]];
    TorusPoint y = sys.unstable_curve_point(m.base, t);
    std::vector<double> s = birkhoff_prefix(sys, phi, y, n_max);
    for (int n = n_min; n <= n_max; ++n) {
      BowenBallU b = u_bowen_ball(sys, y, n, m.r);
      // open ball: shrink the closed query by a relative hair
      double mass = m.mass_in(t + b.lo * (1 - 1e-12), t + b.hi * (1 - 1e-12));
      double ratio = mass / std::exp(-n * m.pressure + s[n - 1]);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  }
  std::ostringstream rs;
  rs << "n=[" << n_min << "," << n_max << "] N=" << m.order << " r=" << m.r;
  return DiagnosticBounds{"u-Gibbs ratio", lo, hi, rs.str(), lo > 0};
}

}  // namespace phm
