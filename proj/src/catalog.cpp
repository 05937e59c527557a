#include "phm/catalog.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "phm/errors.hpp"

namespace phm {

namespace {

Eigen::MatrixXd to_eigen(const IntMatrix& a) {
  const int d = static_cast<int>(a.size());
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = static_cast<double>(a[i][j]);
  return m;
}

// Unit real eigenvector of m for the unique eigenvalue of maximal modulus.
Eigen::VectorXd dominant_vector(const Eigen::MatrixXd& m, double* value) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  int best = 0;
  for (int i = 1; i < m.rows(); ++i)
    if (std::abs(es.eigenvalues()[i]) > std::abs(es.eigenvalues()[best])) best = i;
  *value = es.eigenvalues()[best].real();
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  v.normalize();
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0) v = -v;
      break;
    }
  }
  return v;
}

// Independent route to the expanding eigenvalue: power iteration from a generic vector.
double power_iteration(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.rows());
  for (int i = 0; i < v.size(); ++i) v[i] = 1.0 / (i + 1.0) + 0.1 * i;
  v.normalize();
  double est = 0;
  for (int it = 0; it < 20000; ++it) {
    Eigen::VectorXd w = m * v;
    double next = w.norm();
    w /= next;
    if (w.dot(v) < 0) next = -next;
    bool done = std::abs(next - est) < 1e-15 * std::abs(next) && it > 10;
    est = next;
    v = w;
    if (done) break;
  }
  return std::abs(est);
}

SystemConstants linear_constants(const HyperbolicSplitting& s, double nu) {
  SystemConstants c;
  c.r0 = 0.25;
  c.chi = s.lambda_u;
  c.nu = nu;
  c.lambda = 1.0 / std::sqrt(s.lambda_u);
  c.c1 = 1.0;
  c.c2 = 1.0;
  c.tau = 0.4;
  return c;
}

Vec pad(const Vec& v2, int dim) {
  Vec out{};
  for (int i = 0; i < 2 && i < dim; ++i) out[i] = v2[i];
  return out;
}

Vec apply(const IntMatrix& a, const Vec& v) {
  Vec out{};
  const int d = static_cast<int>(a.size());
  for (int i = 0; i < d; ++i) {
    double s = 0;
    for (int j = 0; j < d; ++j) s += static_cast<double>(a[i][j]) * v[j];
    out[i] = s;
  }
  return out;
}

void require_2x2(const IntMatrix& a, const char* what) {
  if (a.size() != 2 || a[0].size() != 2 || a[1].size() != 2)
    throw ConfigError(std::string(what) + " needs a 2x2 base matrix");
}

}  // namespace

HyperbolicSplitting analyse_hyperbolic(const IntMatrix& a) {
  const int d = static_cast<int>(a.size());
  if (d < 2 || d > kMaxDim) throw ConfigError("matrix size must be in [2, 4]");
  for (const auto& row : a)
    if (static_cast<int>(row.size()) != d) throw ConfigError("matrix must be square");
  Eigen::MatrixXd m = to_eigen(a);
  double det = m.determinant();
  if (std::abs(std::abs(det) - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "matrix determinant " << det << " is not +-1";
    throw ConfigError(os.str());
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  int expanding = 0;
  double top = 0, other = 0;
  for (int i = 0; i < d; ++i) {
    double mod = std::abs(es.eigenvalues()[i]);
    if (std::abs(mod - 1.0) < 1e-9) throw ConfigError("matrix is not hyperbolic: eigenvalue on the unit circle");
    if (mod > 1.0) ++expanding;
    top = std::max(top, mod);
  }
  if (expanding != 1) throw ConfigError("only one-dimensional unstable bundles are supported");
  for (int i = 0; i < d; ++i) {
    double mod = std::abs(es.eigenvalues()[i]);
    if (mod < top) other = std::max(other, mod);
  }

  HyperbolicSplitting s;
  s.dim = d;
  double lam_r = 0, lam_l = 0;
  Eigen::VectorXd r = dominant_vector(m, &lam_r);
  Eigen::VectorXd l = dominant_vector(m.transpose(), &lam_l);
  if (l.dot(r) < 0) l = -l;
  s.lambda_u = std::abs(lam_r);
  s.max_other_modulus = other;
  double pi = power_iteration(m);
  if (std::abs(pi - s.lambda_u) > 1e-9 * s.lambda_u)
    throw NumericalError("expanding eigenvalue disagrees between eigensolver and power iteration");
  for (int i = 0; i < d; ++i) {
    s.e_u[i] = r[i];
    s.l_u[i] = l[i];
  }

  Eigen::MatrixXd inv = m.inverse();
  s.inverse.assign(d, std::vector<long long>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s.inverse[i][j] = std::llround(inv(i, j));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      long long acc = 0;
      for (int k = 0; k < d; ++k) acc += a[i][k] * s.inverse[k][j];
      if (acc != (i == j ? 1 : 0)) throw NumericalError("integer inverse check failed");
    }
  return s;
}

ToralAutomorphism::ToralAutomorphism(IntMatrix a) : ToralAutomorphism(a, analyse_hyperbolic(a)) {}

ToralAutomorphism::ToralAutomorphism(IntMatrix a, HyperbolicSplitting s)
    : System(s.dim, s.e_u, s.l_u, linear_constants(s, s.max_other_modulus)),
      a_(std::move(a)),
      split_(std::move(s)),
      log_lambda_(std::log(split_.lambda_u)) {}

TorusPoint ToralAutomorphism::map(const TorusPoint& x) const { return TorusPoint(dim_, apply(a_, x.x)); }

TorusPoint ToralAutomorphism::inverse(const TorusPoint& x) const {
  return TorusPoint(dim_, apply(split_.inverse, x.x));
}

Vec ToralAutomorphism::tangent_map(const TorusPoint&, const Vec& v) const { return apply(a_, v); }

SkewProduct::SkewProduct(IntMatrix base, double alpha, bool check_irrational)
    : SkewProduct(base, (require_2x2(base, "skew product"), analyse_hyperbolic(base)), alpha,
                  looks_irrational(alpha)) {
  if (check_irrational && !irrational_) throw ConfigError("skew rotation number is (numerically) rational");
}

SkewProduct::SkewProduct(IntMatrix base, HyperbolicSplitting s, double alpha, bool irrational)
    : System(3, pad(s.e_u, 3), pad(s.l_u, 3), linear_constants(s, 1.0)),
      a_(std::move(base)),
      split_(std::move(s)),
      alpha_(alpha),
      log_lambda_(std::log(split_.lambda_u)),
      irrational_(irrational) {
  if (!std::isfinite(alpha)) throw ConfigError("rotation number must be finite");
}

TorusPoint SkewProduct::map(const TorusPoint& x) const {
  Vec b = apply(a_, x.x);
  b[2] = x.x[2] + alpha_;
  b[3] = 0;
  return TorusPoint(3, b);
}

TorusPoint SkewProduct::inverse(const TorusPoint& x) const {
  Vec b = apply(split_.inverse, x.x);
  b[2] = x.x[2] - alpha_;
  b[3] = 0;
  return TorusPoint(3, b);
}

Vec SkewProduct::tangent_map(const TorusPoint&, const Vec& v) const {
  Vec out = apply(a_, v);
  out[2] = v[2];
  out[3] = 0;
  return out;
}

SlowedProduct::SlowedProduct(IntMatrix base, SlowFlow flow)
    : SlowedProduct(base, (require_2x2(base, "slowed product"), analyse_hyperbolic(base)), std::move(flow)) {}

SlowedProduct::SlowedProduct(IntMatrix base, HyperbolicSplitting s, SlowFlow flow)
    : System(4, pad(s.e_u, 4), pad(s.l_u, 4), linear_constants(s, std::numeric_limits<double>::infinity())),
      a_(std::move(base)),
      split_(std::move(s)),
      flow_(std::move(flow)),
      log_lambda_(std::log(split_.lambda_u)) {
  static std::atomic<std::uint64_t> counter{0};
  serial_ = ++counter;
}

TorusPoint SlowedProduct::base_map(const TorusPoint& x) const {
  return TorusPoint(2, apply(a_, x.x));
}

TorusPoint SlowedProduct::fiber_flow(const TorusPoint& y, double time) const {
  // Points of one unstable leaf share their fiber coordinate, so leaf computations ask
  // for the same fiber orbit over and over; a small direct-mapped memo absorbs that.
  struct Entry {
    std::uint64_t owner = 0;
    double a = 0, b = 0, t = 0;
    TorusPoint out;
  };
  thread_local std::array<Entry, 1024> memo{};
  std::uint64_t ha, hb;
  std::memcpy(&ha, &y.x[0], sizeof ha);
  std::memcpy(&hb, &y.x[1], sizeof hb);
  std::uint64_t h = (ha * 0x9E3779B97F4A7C15ULL) ^ (hb + 0x632BE59BD9B4E019ULL + (ha << 6) + (ha >> 2));
  h ^= time > 0 ? 0x5bd1e995ULL : 0;
  Entry& e = memo[(h ^ (h >> 29)) & 1023];
  if (e.owner == serial_ && e.a == y.x[0] && e.b == y.x[1] && e.t == time) return e.out;
  TorusPoint out = flow_.flow(y, time);
  e.owner = serial_;
  e.a = y.x[0];
  e.b = y.x[1];
  e.t = time;
  e.out = out;
  return out;
}

TorusPoint SlowedProduct::map(const TorusPoint& x) const {
  Vec b = apply(a_, x.x);
  TorusPoint y = fiber_flow(TorusPoint{x.x[2], x.x[3]}, 1.0);
  b[2] = y.x[0];
  b[3] = y.x[1];
  return TorusPoint(4, b);
}

TorusPoint SlowedProduct::inverse(const TorusPoint& x) const {
  Vec b = apply(split_.inverse, x.x);
  TorusPoint y = fiber_flow(TorusPoint{x.x[2], x.x[3]}, -1.0);
  b[2] = y.x[0];
  b[3] = y.x[1];
  return TorusPoint(4, b);
}

bool looks_irrational(double alpha, long long max_den) {
  if (!std::isfinite(alpha)) return false;
  double x = alpha;
  double a = std::floor(x);
  long long p_prev = 1, q_prev = 0;
  long long p = static_cast<long long>(a), q = 1;
  double rem = x - a;
  for (;;) {
    if (std::abs(alpha - static_cast<double>(p) / static_cast<double>(q)) <= 1e-14 * std::max(1.0, std::abs(alpha)))
      return false;
    if (rem < 1e-15) return false;
    x = 1.0 / rem;
    a = std::floor(x);
    rem = x - a;
    if (a > static_cast<double>(max_den)) return true;
    long long ai = static_cast<long long>(a);
    long long p_next = ai * p + p_prev;
    long long q_next = ai * q + q_prev;
    if (q_next > max_den) return true;
    p_prev = p;
    q_prev = q;
    p = p_next;
    q = q_next;
  }
}

IntMatrix cat_matrix() { return {{2, 1}, {1, 1}}; }

std::shared_ptr<ToralAutomorphism> make_toral_automorphism(const IntMatrix& a) {
  return std::make_shared<ToralAutomorphism>(a);
}

std::shared_ptr<SkewProduct> make_skew_product(const IntMatrix& a, double alpha) {
  return std::make_shared<SkewProduct>(a, alpha, true);
}

std::shared_ptr<SlowedProduct> make_slowed_product(const IntMatrix& a, const SlowFlowProfile& profile,
                                                   double flow_alpha, double flow_beta, TorusPoint p) {
  validate_profile(profile);
  return std::make_shared<SlowedProduct>(a, SlowFlow(profile, flow_alpha, flow_beta, p));
}

std::vector<std::string> catalog_ids() { return {"cat", "skew", "slowprod"}; }

std::shared_ptr<System> make_system(const SystemOptions& opts) {
  IntMatrix a = opts.matrix.value_or(cat_matrix());
  if (opts.id == "cat") {
    auto sys = make_toral_automorphism(a);
    sys->set_id("cat");
    return sys;
  }
  if (opts.id == "skew") return make_skew_product(a, opts.alpha);
  if (opts.id == "slowprod") {
    SlowFlowProfile prof;
    if (opts.profile == "sqrt")
      prof = sqrt_profile(opts.t0);
    else if (opts.profile == "cuberoot")
      prof = cuberoot_profile(opts.t0);
    else
      throw ConfigError("unknown slow-down profile '" + opts.profile + "'");
    return make_slowed_product(a, prof, opts.flow_alpha, opts.flow_beta, TorusPoint{opts.p1, opts.p2});
  }
  throw ConfigError("unknown system id '" + opts.id + "'");
}

}  // namespace phm
