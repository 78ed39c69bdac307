#pragma once

// Closed-form limit objects: the local-time kernel phi and its inner kernel,
// the triple density of (m_e(s,t), e_s - m, e_t - m), Ito duration weights,
// hitting constants and the scaling constant c = sqrt(rho/2) / sigma.

#include <span>

#include <Eigen/Dense>

#include "treerange/cubature.hpp"
#include "treerange/gw_trees.hpp"
#include "treerange/lattice.hpp"

namespace treerange {

class LimitContext {
 public:
  /// d in {1,2,3}, rho2 > 0, M positive definite.
  LimitContext(double rho2, const Eigen::MatrixXd& m);
  LimitContext(const OffspringDist& mu, const JumpDist& theta);

  int dim() const noexcept { return d_; }
  double rho2() const noexcept { return rho2_; }
  double rho() const noexcept { return rho_; }
  const Eigen::MatrixXd& covariance() const noexcept { return m_; }
  double sigma() const noexcept { return sigma_; }
  double c() const noexcept { return c_; }
  const GaussianKernel& kernel() const noexcept { return kernel_; }

 private:
  int d_;
  double rho2_;
  double rho_;
  Eigen::MatrixXd m_;
  double sigma_;
  double c_;
  GaussianKernel kernel_;
};

/// int dz p_{r1}(z) p_{r2}(x - z) p_{r3}(y - z), in closed form:
/// p_{r1+r2}(x) p_{r3 + r1 r2/(r1+r2)}(y - r1/(r1+r2) x).
double inner_kernel(const LimitContext& ctx, std::span<const double> x, std::span<const double> y, double r1, double r2,
                    double r3);

/// Psi_{x,y}(u, v, w) = inner_kernel(w, u - w, v - w) for w <= min(u, v).
double psi(const LimitContext& ctx, std::span<const double> x, std::span<const double> y, double u, double v, double w);

struct PhiValue {
  double value = 0.0;
  double error = 0.0;
  std::size_t evals = 0;
};

/// rho^4 int_{R_+^3} (r1+r2+r3) exp(-rho^2 (r1+r2+r3)^2 / 2) inner_kernel dr,
/// with r = s/(1-s) per axis. x and y must be nonzero. Throws
/// QuadratureNotConverged.
PhiValue phi(const LimitContext& ctx, std::span<const double> x, std::span<const double> y, double rel_tol = 1e-6);

/// Mass of 16 (r1+r2+r3) exp(-2 (r1+r2+r3)^2) over R_+^3, by cubature.
double triple_density_mass(double rel_tol = 1e-9);
/// Same density restricted to r1 + r2 + r3 <= s_max, by its 1-D reduction.
double triple_density_mass_below(double s_max);

/// (2 - d/2) |x - y|^{-2}.
double hitting_constant(int d, std::span<const double> x, std::span<const double> y);

/// 2 (4 - d) / rho^2.
double visit_limit_constant(const LimitContext& ctx);

/// 1 / (2 sqrt(2 pi r^3)).
double ito_weight(double r);

}  // namespace treerange
