#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "phm/phase_measure.hpp"
#include "phm/system.hpp"

namespace phm {

struct TestFunction {
  std::string name;
  std::function<double(const TorusPoint&)> f;
};

struct BirkhoffRow {
  std::string name;
  std::vector<double> forward, backward;  ///< per sample
  double mean = 0;
  double dispersion = 0;    ///< standard deviation of the forward averages
  double max_mismatch = 0;  ///< max |forward - backward|
  double split_gap = 0;     ///< distance between the two cluster means of the best 2-split
  double explained = 0;     ///< fraction of variance explained by that split
};

struct BirkhoffProbe {
  int n = 0;
  std::vector<TorusPoint> starts;
  std::vector<BirkhoffRow> rows;
};

/// Fill mean, dispersion, mismatch and best-split statistics from forward/backward.
void summarize_birkhoff(BirkhoffRow& row);

/// Forward and backward Birkhoff averages over n steps from each start point.
BirkhoffProbe birkhoff_probe(const System& sys, const std::vector<TorusPoint>& starts,
                             const std::vector<TestFunction>& tests, int n);
/// Start points drawn from mu by inverse-CDF sampling.
BirkhoffProbe birkhoff_probe(const System& sys, const PhaseMeasure& mu, const std::vector<TestFunction>& tests, int n,
                             std::size_t samples, std::uint64_t seed);

struct TransitivityRow {
  TorusPoint x, y;
  int k = -1;  ///< first k with f^k(B^u(x, delta)) meeting B^cs(y, delta); -1 if none up to n_cap
};

/// Leaf balls sampled finely enough that consecutive image points stay within delta/4.
std::vector<TransitivityRow> transitivity_probe(const System& sys, double delta, int n_cap,
                                                const std::vector<std::pair<TorusPoint, TorusPoint>>& pairs);
std::vector<TransitivityRow> transitivity_probe(const System& sys, double delta, int n_cap, std::size_t pairs,
                                                std::uint64_t seed);

}  // namespace phm
