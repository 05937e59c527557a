#include "phm/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "phm/equilibrium.hpp"
#include "phm/errors.hpp"

namespace phm {

void summarize_birkhoff(BirkhoffRow& row) {
  const std::vector<double>& v = row.forward;
  const double n = static_cast<double>(v.size());
  row.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0;
  for (double x : v) ss += (x - row.mean) * (x - row.mean);
  row.dispersion = std::sqrt(ss / n);
  for (std::size_t i = 0; i < v.size(); ++i)
    row.max_mismatch = std::max(row.max_mismatch, std::abs(row.forward[i] - row.backward[i]));

  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  std::vector<double> pre(s.size() + 1, 0.0), pre2(s.size() + 1, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    pre[i + 1] = pre[i] + s[i];
    pre2[i + 1] = pre2[i] + s[i] * s[i];
  }
  auto within = [&](std::size_t a, std::size_t b) {
    double m = static_cast<double>(b - a);
    double sum = pre[b] - pre[a];
    return std::max(0.0, pre2[b] - pre2[a] - sum * sum / m);
  };
  double best = ss;
  for (std::size_t cut = 1; cut < s.size(); ++cut) {
    double w = within(0, cut) + within(cut, s.size());
    if (w < best) {
      best = w;
      row.split_gap = (pre[s.size()] - pre[cut]) / (s.size() - cut) - pre[cut] / cut;
    }
  }
  row.explained = ss > 0 ? 1 - best / ss : 0.0;
}

BirkhoffProbe birkhoff_probe(const System& sys, const std::vector<TorusPoint>& starts,
                             const std::vector<TestFunction>& tests, int n) {
  if (n < 1 || starts.empty()) throw DomainError("Birkhoff probe needs n >= 1 and samples");
  BirkhoffProbe out;
  out.n = n;
  out.starts = starts;
  const std::size_t m = starts.size();
  out.rows.resize(tests.size());
  for (std::size_t t = 0; t < tests.size(); ++t) {
    out.rows[t].name = tests[t].name;
    out.rows[t].forward.assign(m, 0.0);
    out.rows[t].backward.assign(m, 0.0);
  }
  // all samples advance in lockstep so that systems memoizing shared sub-orbits benefit
  for (int dir = 0; dir < 2; ++dir) {
    std::vector<TorusPoint> pts = starts;
    for (int k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t t = 0; t < tests.size(); ++t) {
          double v = tests[t].f(pts[i]);
          (dir == 0 ? out.rows[t].forward : out.rows[t].backward)[i] += v;
        }
        if (k + 1 < n) pts[i] = dir == 0 ? sys.map(pts[i]) : sys.inverse(pts[i]);
      }
    }
  }
  for (BirkhoffRow& row : out.rows) {
    for (std::size_t i = 0; i < m; ++i) {
      row.forward[i] /= n;
      row.backward[i] /= n;
    }
    summarize_birkhoff(row);
  }
  return out;
}

BirkhoffProbe birkhoff_probe(const System& sys, const PhaseMeasure& mu, const std::vector<TestFunction>& tests, int n,
                             std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw DomainError("Birkhoff probe needs samples");
  return birkhoff_probe(sys, sample_points(mu, samples, seed), tests, n);
}

std::vector<TransitivityRow> transitivity_probe(const System& sys, double delta, int n_cap,
                                                const std::vector<std::pair<TorusPoint, TorusPoint>>& pairs) {
  if (!(delta > 0) || n_cap < 0) throw DomainError("transitivity probe needs delta > 0 and n_cap >= 0");
  const double rate = std::max(sys.constants().chi, 1.0);
  if (delta * std::pow(rate, n_cap) > 1e6) throw DomainError("transitivity probe sampling too dense");
  const bool straight = sys.leaf_translation_invariant() && sys.leaf_expansion().has_value();
  std::vector<TransitivityRow> out;
  for (const auto& [x, y] : pairs) {
    TransitivityRow row{x, y, -1};
    for (int k = 0; k <= n_cap && row.k < 0; ++k) {
      const double h = delta / (4 * std::pow(rate, k));
      const long count = static_cast<long>(std::ceil(2 * delta / h));
      // a translation-invariant leaf is carried to the straight segment through f^k x
      const TorusPoint fx = iterate(sys, x, k);
      const double scale = straight ? leaf_scale(sys, x, k) : 0.0;
      LocalCoords prev;
      bool have_prev = false;
      for (long i = 0; i <= count && row.k < 0; ++i) {
        double t = std::min(-delta + i * h, delta);
        const TorusPoint img =
            straight ? sys.unstable_curve_point(fx, scale * t) : iterate(sys, sys.unstable_curve_point(x, t), k);
        LocalCoords c = sys.local_coords(y, img);
        if (have_prev && (prev.u <= 0) != (c.u <= 0) && std::abs(c.u - prev.u) < delta) {
          double w = prev.u / (prev.u - c.u);
          double n2 = 0;
          bool jump = false;
          for (int j = 0; j < sys.cs_dim(); ++j) {
            if (std::abs(c.cs[j] - prev.cs[j]) > delta) jump = true;
            double v = prev.cs[j] + w * (c.cs[j] - prev.cs[j]);
            n2 += v * v;
          }
          if (!jump && std::sqrt(n2) < delta) row.k = k;
        }
        prev = c;
        have_prev = true;
      }
    }
    out.push_back(row);
  }
  return out;
}

std::vector<TransitivityRow> transitivity_probe(const System& sys, double delta, int n_cap, std::size_t pairs,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<TorusPoint, TorusPoint>> ps;
  for (std::size_t i = 0; i < pairs; ++i) {
    Vec a{}, b{};
    for (int j = 0; j < sys.dim(); ++j) a[j] = unit_double(rng());
    for (int j = 0; j < sys.dim(); ++j) b[j] = unit_double(rng());
    ps.emplace_back(TorusPoint(sys.dim(), a), TorusPoint(sys.dim(), b));
  }
  return transitivity_probe(sys, delta, n_cap, ps);
}

}  // namespace phm
