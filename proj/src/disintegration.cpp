#include "phm/disintegration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "phm/equilibrium.hpp"
#include "phm/errors.hpp"

namespace phm {

namespace {

int axis_slabs(int plaques, int cs_dim) {
  if (plaques < 1) throw DomainError("need at least one plaque");
  if (cs_dim == 1) return plaques;
  return std::max(1, static_cast<int>(std::lround(std::pow(plaques, 1.0 / cs_dim))));
}

// Mass of a piecewise-uniform cell table (cells of width h starting at lo) inside [a, b].
double table_mass(const std::vector<double>& cells, double lo, double h, double a, double b) {
  double m = 0;
  for (std::size_t j = 0; j < cells.size(); ++j) {
    double c0 = lo + j * h, c1 = c0 + h;
    double ov = std::min(b, c1) - std::max(a, c0);
    if (ov > 0) m += cells[j] * ov / h;
  }
  return m;
}

// Cell masses of mu along the line through q, u in [u_lo, u_hi], in a slab of cs half-widths hw.
std::vector<double> slab_cells(const System& sys, const PhaseMeasure& mu, const TorusPoint& q, double u_lo,
                               double u_hi, const CsVec& hw, int u_cells, int sub) {
  const int d = sys.dim(), dc = d - 1;
  const double hu = (u_hi - u_lo) / u_cells;
  double dv = hu * chart_jacobian(sys);
  for (int k = 0; k < dc; ++k) dv *= 2 * hw[k];
  int per_cell = 1;
  for (int i = 0; i < d; ++i) per_cell *= sub;
  dv /= per_cell;
  std::vector<double> out(u_cells, 0.0);
  for (int j = 0; j < u_cells; ++j) {
    for (int s = 0; s < per_cell; ++s) {
      int rest = s;
      LocalCoords c;
      c.u = u_lo + (j + (rest % sub + 0.5) / sub) * hu;
      rest /= sub;
      for (int k = 0; k < dc; ++k) {
        c.cs[k] = -hw[k] + (rest % sub + 0.5) / sub * 2 * hw[k];
        rest /= sub;
      }
      out[j] += mu.density(sys.local_point(q, c)) * dv;
    }
  }
  return out;
}

}  // namespace

TorusPoint ConditionalFamily::plaque_point(const System& sys, std::size_t p) const {
  LocalCoords c;
  c.cs = plaque_cs[p];
  return rect.point(sys, c);
}

ConditionalFamily disintegrate(const System& sys, const PhaseMeasure& mu, const Rectangle& R, int plaques,
                               int u_cells, int sub) {
  if (u_cells < 1 || sub < 1) throw DomainError("disintegration needs positive cell counts");
  if (mu.dim() != sys.dim()) throw DomainError("measure and system dimensions differ");
  const int d = sys.dim(), dc = d - 1;
  ConditionalFamily fam;
  fam.rect = R;
  fam.plaques_per_axis = axis_slabs(plaques, dc);
  fam.u_cells = u_cells;
  const int ppa = fam.plaques_per_axis;
  std::size_t count = 1;
  for (int k = 0; k < dc; ++k) count *= ppa;

  CsVec hw{};
  for (int k = 0; k < dc; ++k) hw[k] = R.dcs[k] / ppa;
  for (std::size_t p = 0; p < count; ++p) {
    CsVec cs{};
    std::size_t rest = p;
    for (int k = 0; k < dc; ++k) {
      cs[k] = -R.dcs[k] + (rest % ppa + 0.5) * 2 * hw[k];
      rest /= ppa;
    }
    fam.plaque_cs.push_back(cs);
    LocalCoords c;
    c.cs = cs;
    fam.cells.push_back(slab_cells(sys, mu, R.point(sys, c), -R.du, R.du, hw, u_cells, sub));
  }
  for (const auto& row : fam.cells)
    for (double m : row) fam.mass += m;
  if (!(fam.mass > 1e-14)) throw NumericalError("measure of the rectangle is below the mass floor");

  for (const auto& row : fam.cells) {
    double s = 0;
    for (double m : row) s += m;
    fam.factor.push_back(s / fam.mass);
    std::vector<double> cond(u_cells, 1.0 / u_cells);
    if (s > 0) {
      for (int j = 0; j < u_cells; ++j) cond[j] = row[j] / s;
    } else {
      ++fam.empty_plaques;
    }
    fam.conditionals.push_back(std::move(cond));
  }

  // Bins of mu|_R by the same quadrature against factor x conditional spread evenly per cell.
  std::vector<double> direct(mu.size(), 0.0), rebuilt(mu.size(), 0.0);
  const double hu = 2 * R.du / u_cells;
  int per_cell = 1;
  for (int i = 0; i < d; ++i) per_cell *= sub;
  double dv = hu * chart_jacobian(sys);
  for (int k = 0; k < dc; ++k) dv *= 2 * hw[k];
  dv /= per_cell;
  for (std::size_t p = 0; p < count; ++p) {
    LocalCoords base;
    base.cs = fam.plaque_cs[p];
    TorusPoint q = R.point(sys, base);
    for (int j = 0; j < u_cells; ++j) {
      const double share = fam.factor[p] * fam.conditionals[p][j] * fam.mass / per_cell;
      for (int s = 0; s < per_cell; ++s) {
        int rest = s;
        LocalCoords c;
        c.u = -R.du + (j + (rest % sub + 0.5) / sub) * hu;
        rest /= sub;
        for (int k = 0; k < dc; ++k) {
          c.cs[k] = -hw[k] + (rest % sub + 0.5) / sub * 2 * hw[k];
          rest /= sub;
        }
        TorusPoint y = sys.local_point(q, c);
        std::size_t idx = mu.index_of(y);
        direct[idx] += mu.density(y) * dv;
        rebuilt[idx] += share;
      }
    }
  }
  double tv = 0;
  for (std::size_t i = 0; i < direct.size(); ++i) tv += std::abs(direct[i] - rebuilt[i]);
  fam.reconstruction_tv = 0.5 * tv / fam.mass;
  return fam;
}

std::vector<LeafMeasure> plaque_references(const System& sys, const Potential& phi, const ConditionalFamily& fam,
                                           double r, int N, double pressure) {
  std::vector<LeafMeasure> out;
  out.reserve(fam.plaque_count());
  for (std::size_t p = 0; p < fam.plaque_count(); ++p)
    out.push_back(reference_measure(sys, phi, fam.plaque_point(sys, p), r, N, pressure, fam.rect.du, true));
  return out;
}

namespace {

std::vector<double> reference_cells(const LeafMeasure& m, double du, int u_cells) {
  const double h = 2 * du / u_cells;
  std::vector<double> out(u_cells);
  double total = 0;
  for (int j = 0; j < u_cells; ++j) {
    // half-open cells so that boundary atoms count once
    double a = -du + j * h, b = j + 1 == u_cells ? du : std::nextafter(-du + (j + 1) * h, -1e300);
    out[j] = m.mass_in(a, b);
    total += out[j];
  }
  if (total > 0)
    for (double& v : out) v /= total;
  return out;
}

}  // namespace

ConditionalFamily with_reference_conditionals(const ConditionalFamily& fam, const std::vector<LeafMeasure>& refs) {
  if (refs.size() != fam.plaque_count()) throw DomainError("one reference measure per plaque required");
  ConditionalFamily out = fam;
  for (std::size_t p = 0; p < refs.size(); ++p) out.conditionals[p] = reference_cells(refs[p], fam.rect.du, fam.u_cells);
  return out;
}

DensityComparison density_vs_reference(const ConditionalFamily& fam, const std::vector<LeafMeasure>& refs,
                                       double c0_threshold) {
  if (refs.size() != fam.plaque_count()) throw DomainError("one reference measure per plaque required");
  DensityComparison out;
  out.c0 = 1.0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (std::size_t p = 0; p < refs.size(); ++p) {
    std::vector<double> ref = reference_cells(refs[p], fam.rect.du, fam.u_cells);
    std::vector<double> row(fam.u_cells, std::numeric_limits<double>::quiet_NaN());
    for (int j = 0; j < fam.u_cells; ++j) {
      double c = fam.conditionals[p][j];
      if (!(c > 0) || !(ref[j] > 0) || !(fam.factor[p] > 0)) {
        ++out.excluded;
        continue;
      }
      row[j] = c / ref[j];
      out.c0 = std::max({out.c0, row[j], 1.0 / row[j]});
      lo = std::min(lo, row[j]);
      hi = std::max(hi, row[j]);
    }
    out.ratios.push_back(std::move(row));
  }
  std::ostringstream rs;
  rs << "plaques=" << refs.size() << " cells=" << fam.u_cells << " excluded=" << out.excluded << " C0=" << out.c0;
  out.bounds = DiagnosticBounds{"conditional / reference density", std::isfinite(lo) ? lo : 0.0, hi, rs.str(),
                                std::isfinite(lo) && out.c0 < c0_threshold};
  return out;
}

ProductStructure product_structure_check(const System& sys, const PhaseMeasure& mu, const Rectangle& R, int plaques,
                                         int u_cells, double threshold) {
  ConditionalFamily fam = disintegrate(sys, mu, R, plaques, u_cells);
  ProductStructure out;
  const std::size_t count = fam.plaque_count();
  out.generic_plaque = count / 2;
  if (!(fam.factor[out.generic_plaque] > 0))
    out.generic_plaque = std::max_element(fam.factor.begin(), fam.factor.end()) - fam.factor.begin();
  const std::size_t g = out.generic_plaque;
  const TorusPoint yg = fam.plaque_point(sys, g);
  const double h = 2 * R.du / u_cells;

  double tv = 0;
  for (std::size_t p = 0; p < count; ++p) {
    const TorusPoint z = fam.plaque_point(sys, p);
    // carry the generic conditional along the holonomy yg -> z, cell by cell
    std::vector<double> carried(u_cells, 0.0);
    for (int j = 0; j < u_cells; ++j) {
      double a = -R.du + j * h, b = a + h;
      double ua = sys.local_coords(R.center, holonomy_map(sys, R, yg, z, sys.unstable_curve_point(yg, a))).u;
      double ub = sys.local_coords(R.center, holonomy_map(sys, R, yg, z, sys.unstable_curve_point(yg, b))).u;
      if (ub < ua) std::swap(ua, ub);
      for (int i = 0; i < u_cells; ++i) {
        double c0 = -R.du + i * h, c1 = c0 + h;
        double ov = std::min(ub, c1) - std::max(ua, c0);
        if (ov > 0) carried[i] += fam.conditionals[g][j] * ov / (ub - ua);
      }
    }
    for (int j = 0; j < u_cells; ++j) tv += std::abs(fam.cells[p][j] / fam.mass - fam.factor[p] * carried[j]);
  }
  out.tv = 0.5 * tv;
  std::ostringstream rs;
  rs << "plaques=" << count << " cells=" << u_cells << " generic=" << g;
  out.bounds = DiagnosticBounds{"local product TV", out.tv, out.tv, rs.str(), out.tv < threshold};
  return out;
}

double overlap_consistency(const System& sys, const PhaseMeasure& mu, const Rectangle& R1, const Rectangle& R2,
                           int plaques, int u_cells) {
  LocalCoords off = sys.local_coords(R1.center, R2.center);
  for (int k = 0; k < sys.cs_dim(); ++k)
    if (std::abs(off.cs[k]) > 1e-9 || std::abs(R1.dcs[k] - R2.dcs[k]) > 1e-12)
      throw DomainError("overlap check needs rectangles sharing their cs extent");
  const double s = off.u;
  const double a = std::max(-R1.du, s - R2.du), b = std::min(R1.du, s + R2.du);
  if (!(b > a)) throw DomainError("rectangles do not overlap");
  ConditionalFamily f1 = disintegrate(sys, mu, R1, plaques, u_cells);
  ConditionalFamily f2 = disintegrate(sys, mu, R2, plaques, u_cells);
  const double h1 = 2 * R1.du / u_cells, h2 = 2 * R2.du / u_cells;
  const int pieces = std::max(2, static_cast<int>(std::floor((b - a) / std::max(h1, h2))));
  double worst = 0;
  for (std::size_t p = 0; p < f1.plaque_count(); ++p) {
    if (!(f1.factor[p] > 0) || !(f2.factor[p] > 0)) continue;
    std::vector<double> ratio;
    for (int i = 0; i < pieces; ++i) {
      double lo = a + (b - a) * i / pieces, hi = a + (b - a) * (i + 1) / pieces;
      double m1 = table_mass(f1.conditionals[p], -R1.du, h1, lo, hi);
      double m2 = table_mass(f2.conditionals[p], -R2.du, h2, lo - s, hi - s);
      if (m1 > 0 && m2 > 0) ratio.push_back(m1 / m2);
    }
    if (ratio.empty()) continue;
    double mean = 0;
    for (double v : ratio) mean += v;
    mean /= ratio.size();
    for (double v : ratio) worst = std::max(worst, std::abs(v / mean - 1));
  }
  return worst;
}

double conditional_invariance(const System& sys, const PhaseMeasure& mu, const Rectangle& R, std::size_t plaque,
                              int plaques, int u_cells) {
  ConditionalFamily fam = disintegrate(sys, mu, R, plaques, u_cells);
  if (plaque >= fam.plaque_count()) throw DomainError("plaque index out of range");
  const TorusPoint q = fam.plaque_point(sys, plaque);
  const double scale = leaf_scale(sys, q, 1);
  CsVec hw{};
  for (int k = 0; k < sys.cs_dim(); ++k) hw[k] = R.dcs[k] / fam.plaques_per_axis;
  const double ext = std::abs(scale) * R.du;
  std::vector<double> image = slab_cells(sys, mu, sys.map(q), -ext, ext, hw, u_cells, 4);
  if (scale < 0) std::reverse(image.begin(), image.end());
  std::vector<double> ratio;
  for (int j = 0; j < u_cells; ++j)
    if (fam.conditionals[plaque][j] > 0 && image[j] > 0) ratio.push_back(image[j] / fam.conditionals[plaque][j]);
  if (ratio.empty()) throw NumericalError("no mass on the plaque or its image");
  double mean = 0;
  for (double v : ratio) mean += v;
  mean /= ratio.size();
  double worst = 0;
  for (double v : ratio) worst = std::max(worst, std::abs(v / mean - 1));
  return worst;
}

}  // namespace phm
