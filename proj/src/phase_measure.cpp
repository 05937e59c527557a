#include "phm/phase_measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "phm/errors.hpp"

namespace phm {

PhaseMeasure::PhaseMeasure(int dim, int bins) : dim_(dim), bins_(bins) {
  if (dim < 1 || dim > kMaxDim) throw DomainError("phase measure dimension must be in [1, 4]");
  if (bins < 1) throw DomainError("phase measure needs at least one bin per axis");
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(bins);
  if (n > (std::size_t{1} << 26)) throw DomainError("phase grid too large");
  mass_.assign(n, 0.0);
  bin_volume_ = std::pow(1.0 / bins, dim);
}

std::size_t PhaseMeasure::index_of(const TorusPoint& p) const {
  std::size_t idx = 0, stride = 1;
  for (int i = 0; i < dim_; ++i) {
    int c = std::min(bins_ - 1, static_cast<int>(p.x[i] * bins_));
    idx += static_cast<std::size_t>(c) * stride;
    stride *= static_cast<std::size_t>(bins_);
  }
  return idx;
}

std::array<int, kMaxDim> PhaseMeasure::cell(std::size_t index) const {
  std::array<int, kMaxDim> c{};
  for (int i = 0; i < dim_; ++i) {
    c[i] = static_cast<int>(index % bins_);
    index /= bins_;
  }
  return c;
}

TorusPoint PhaseMeasure::bin_center(std::size_t index) const {
  auto c = cell(index);
  Vec v{};
  for (int i = 0; i < dim_; ++i) v[i] = (c[i] + 0.5) / bins_;
  return TorusPoint(dim_, v);
}

void PhaseMeasure::add(const TorusPoint& p, double w) { mass_[index_of(p)] += w; }

double PhaseMeasure::total() const { return std::accumulate(mass_.begin(), mass_.end(), 0.0); }

void PhaseMeasure::normalize() {
  double t = total();
  if (!(t > 0)) throw NumericalError("cannot normalize a measure of zero mass");
  for (double& m : mass_) m /= t;
}

double PhaseMeasure::density(const TorusPoint& p) const { return mass_[index_of(p)] / bin_volume_; }

PhaseMeasure PhaseMeasure::coarsened() const {
  if (bins_ % 2 != 0) throw DomainError("coarsening needs an even bin count");
  PhaseMeasure out(dim_, bins_ / 2);
  out.provenance = provenance;
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    auto c = cell(i);
    std::size_t idx = 0, stride = 1;
    for (int k = 0; k < dim_; ++k) {
      idx += static_cast<std::size_t>(c[k] / 2) * stride;
      stride *= static_cast<std::size_t>(out.bins_);
    }
    out.mass_[idx] += mass_[i];
  }
  return out;
}

int default_bins(int dim) { return dim <= 2 ? 32 : 16; }

PhaseMeasure uniform_measure(int dim, int bins) {
  PhaseMeasure m(dim, bins);
  std::fill(m.masses().begin(), m.masses().end(), 1.0 / static_cast<double>(m.size()));
  return m;
}

double total_variation(const PhaseMeasure& a, const PhaseMeasure& b) {
  if (a.dim() != b.dim() || a.bins() != b.bins()) throw DomainError("TV needs measures on the same grid");
  double ta = a.total(), tb = b.total();
  if (!(ta > 0) || !(tb > 0)) throw NumericalError("TV of a zero measure");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.masses()[i] / ta - b.masses()[i] / tb);
  return 0.5 * s;
}

std::vector<TorusPoint> sample_points(const PhaseMeasure& mu, std::size_t count, std::uint64_t seed) {
  std::vector<double> cdf(mu.size());
  std::partial_sum(mu.masses().begin(), mu.masses().end(), cdf.begin());
  const double total = cdf.empty() ? 0.0 : cdf.back();
  if (!(total > 0)) throw NumericalError("cannot sample from a zero measure");
  std::mt19937_64 rng(seed);
  std::vector<TorusPoint> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    double u = unit_double(rng()) * total;
    std::size_t idx = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    idx = std::min(idx, mu.size() - 1);
    while (mu.masses()[idx] <= 0 && idx > 0) --idx;
    auto c = mu.cell(idx);
    Vec v{};
    for (int i = 0; i < mu.dim(); ++i) v[i] = (c[i] + unit_double(rng())) / mu.bins();
    out.emplace_back(mu.dim(), v);
  }
  return out;
}

}  // namespace phm
