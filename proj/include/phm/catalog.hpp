#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phm/system.hpp"

namespace phm {

using IntMatrix = std::vector<std::vector<long long>>;

/// Eigen-data of a hyperbolic integer matrix with exactly one expanding eigenvalue.
struct HyperbolicSplitting {
  int dim = 0;
  double lambda_u = 0;           ///< the expanding eigenvalue, by modulus
  double max_other_modulus = 0;  ///< largest modulus among the remaining eigenvalues
  Vec e_u{};                     ///< right eigenvector (unit, first nonzero entry positive)
  Vec l_u{};                     ///< left eigenvector for lambda_u
  IntMatrix inverse;
};

/// Validates |det A| = 1, no eigenvalue on the unit circle, exactly one expanding eigenvalue.
HyperbolicSplitting analyse_hyperbolic(const IntMatrix& a);

/// x -> A x mod Z^d.
class ToralAutomorphism : public System {
 public:
  explicit ToralAutomorphism(IntMatrix a);

  std::string id() const override { return id_; }
  TorusPoint map(const TorusPoint& x) const override;
  TorusPoint inverse(const TorusPoint& x) const override;
  double log_unstable_jacobian(const TorusPoint&) const override { return log_lambda_; }
  bool satisfies_c1() const override { return true; }
  bool transitive_c2() const override { return true; }
  Vec tangent_map(const TorusPoint& x, const Vec& v) const override;
  std::optional<double> leaf_expansion() const override { return split_.lambda_u; }
  bool leaf_translation_invariant() const override { return true; }
  std::optional<double> topological_entropy() const override { return log_lambda_; }

  const IntMatrix& matrix() const { return a_; }
  const HyperbolicSplitting& splitting() const { return split_; }
  void set_id(std::string id) { id_ = std::move(id); }

 private:
  ToralAutomorphism(IntMatrix a, HyperbolicSplitting s);

  IntMatrix a_;
  HyperbolicSplitting split_;
  double log_lambda_;
  std::string id_ = "automorphism";
};

/// (x, theta) -> (A x, theta + alpha) on T^2 x T^1.
class SkewProduct : public System {
 public:
  /// check_irrational=false admits rational rotations, used as a negative control.
  SkewProduct(IntMatrix base, double alpha, bool check_irrational = true);

  std::string id() const override { return "skew"; }
  TorusPoint map(const TorusPoint& x) const override;
  TorusPoint inverse(const TorusPoint& x) const override;
  double log_unstable_jacobian(const TorusPoint&) const override { return log_lambda_; }
  bool satisfies_c1() const override { return true; }
  bool transitive_c2() const override { return irrational_; }
  Vec tangent_map(const TorusPoint& x, const Vec& v) const override;
  std::optional<double> leaf_expansion() const override { return split_.lambda_u; }
  bool leaf_translation_invariant() const override { return true; }
  std::optional<double> topological_entropy() const override { return log_lambda_; }

  double alpha() const { return alpha_; }

 private:
  SkewProduct(IntMatrix base, HyperbolicSplitting s, double alpha, bool irrational);

  IntMatrix a_;
  HyperbolicSplitting split_;
  double alpha_;
  double log_lambda_;
  bool irrational_;
};

/// Radial slow-down profile kappa on [0, inf): kappa(0)=0, kappa>0 on (0,t0), kappa=1 beyond t0.
struct SlowFlowProfile {
  std::string name;
  double t0 = 0.1;
  std::function<double(double)> kappa;
};

/// (t/t0)^exponent blended into 1 on [0.9 t0, t0] by a C^1 smoothstep.
SlowFlowProfile power_profile(double t0, double exponent, std::string name);
SlowFlowProfile sqrt_profile(double t0);
SlowFlowProfile cuberoot_profile(double t0);

struct ProfileCheck {
  double integral = 0;  ///< numerical value of the integral of 1/kappa over (0, 1]
  double tail_ratio = 0;
};
/// Throws ConfigError when a profile property fails.
ProfileCheck validate_profile(const SlowFlowProfile& profile);

/// Flow of psi * (alpha, beta) on T^2, psi equal to kappa(|chi(y)|) near p and 1 elsewhere.
class SlowFlow {
 public:
  SlowFlow(SlowFlowProfile profile, double alpha, double beta, TorusPoint p);

  double psi(const TorusPoint& y) const;
  /// Time-T map (T may be negative). step is the base RK4 step.
  TorusPoint flow(const TorusPoint& y, double time, double step = 1e-3) const;
  const TorusPoint& fixed_point() const { return p_; }
  const SlowFlowProfile& profile() const { return profile_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  /// Invariant probability density proportional to 1/psi, integrated over a bins x bins grid.
  std::vector<double> invariant_bin_masses(int bins, int sub = 64) const;

 private:
  // Line parameter intervals (s_in, s_out) where y + s (alpha,beta) is in the slowed disk.
  std::vector<std::pair<double, double>> crossings(const TorusPoint& y, double s_lo, double s_hi) const;

  SlowFlowProfile profile_;
  double alpha_, beta_;
  TorusPoint p_;
};

/// (x, y) -> (A x, g(y)) on T^2 x T^2, g the time-one map of a SlowFlow.
class SlowedProduct : public System {
 public:
  SlowedProduct(IntMatrix base, SlowFlow flow);

  std::string id() const override { return "slowprod"; }
  TorusPoint map(const TorusPoint& x) const override;
  TorusPoint inverse(const TorusPoint& x) const override;
  double log_unstable_jacobian(const TorusPoint&) const override { return log_lambda_; }
  bool satisfies_c1() const override { return false; }
  bool transitive_c2() const override { return true; }
  std::optional<double> leaf_expansion() const override { return split_.lambda_u; }
  bool leaf_translation_invariant() const override { return true; }
  std::optional<double> topological_entropy() const override { return log_lambda_; }

  const SlowFlow& flow() const { return flow_; }
  TorusPoint base_map(const TorusPoint& x) const;

 private:
  SlowedProduct(IntMatrix base, HyperbolicSplitting s, SlowFlow flow);
  TorusPoint fiber_flow(const TorusPoint& y, double time) const;

  std::uint64_t serial_ = 0;
  IntMatrix a_;
  HyperbolicSplitting split_;
  SlowFlow flow_;
  double log_lambda_;
};

/// True unless some continued-fraction convergent with denominator <= max_den equals alpha.
bool looks_irrational(double alpha, long long max_den = 1000000);

struct SystemOptions {
  std::string id = "cat";
  std::optional<IntMatrix> matrix;
  double alpha = 1.4142135623730951 - 1.0;  ///< skew rotation number
  double t0 = 0.1;
  std::string profile = "sqrt";
  double flow_alpha = 0.6180339887498949;
  double flow_beta = 1.4142135623730951;
  double p1 = 0.5, p2 = 0.5;
};

std::shared_ptr<ToralAutomorphism> make_toral_automorphism(const IntMatrix& a);
std::shared_ptr<SkewProduct> make_skew_product(const IntMatrix& a, double alpha);
std::shared_ptr<SlowedProduct> make_slowed_product(const IntMatrix& a, const SlowFlowProfile& profile,
                                                   double flow_alpha, double flow_beta, TorusPoint p);

/// Build a catalog entry ("cat", "skew", "slowprod") with its default parameters overridden by opts.
std::shared_ptr<System> make_system(const SystemOptions& opts);
std::vector<std::string> catalog_ids();
IntMatrix cat_matrix();

}  // namespace phm
