#include "treerange/limits.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "treerange/errors.hpp"

namespace treerange {

namespace {

void check_point(const LimitContext& ctx, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(ctx.dim())) throw std::invalid_argument("point dimension mismatch");
}

bool is_zero(std::span<const double> x) {
  for (double v : x) {
    if (v != 0.0) return false;
  }
  return true;
}

}  // namespace

LimitContext::LimitContext(double rho2, const Eigen::MatrixXd& m)
    : d_(static_cast<int>(m.rows())), rho2_(rho2), rho_(std::sqrt(rho2)), m_(m), kernel_(m) {
  if (d_ < 1 || d_ > 3 || m.cols() != m.rows()) throw std::invalid_argument("limit objects need d in {1, 2, 3}");
  if (!(rho2 > 0.0)) throw std::invalid_argument("rho^2 must be positive");
  if (Eigen::LLT<Eigen::MatrixXd>(m).info() != Eigen::Success) throw std::invalid_argument("covariance must be positive definite");
  sigma_ = std::pow(m.determinant(), 1.0 / (2.0 * d_));
  c_ = std::sqrt(rho_ / 2.0) / sigma_;
}

LimitContext::LimitContext(const OffspringDist& mu, const JumpDist& theta) : LimitContext(mu.rho2(), theta.covariance()) {}

double inner_kernel(const LimitContext& ctx, std::span<const double> x, std::span<const double> y, double r1, double r2,
                    double r3) {
  check_point(ctx, x);
  check_point(ctx, y);
  const double s = r1 + r2;
  if (!(s > 0.0)) return 0.0;
  const double alpha = r1 / s;
  std::array<double, 3> shifted{};
  for (std::size_t i = 0; i < x.size(); ++i) shifted[i] = y[i] - alpha * x[i];
  const double t = r3 + r1 * r2 / s;
  if (!(t > 0.0)) return 0.0;
  return ctx.kernel()(s, x) * ctx.kernel()(t, std::span<const double>(shifted.data(), x.size()));
}

double psi(const LimitContext& ctx, std::span<const double> x, std::span<const double> y, double u, double v, double w) {
  if (w < 0.0 || w > u || w > v) throw std::invalid_argument("psi needs 0 <= w <= min(u, v)");
  return inner_kernel(ctx, x, y, w, u - w, v - w);
}

PhiValue phi(const LimitContext& ctx, std::span<const double> x, std::span<const double> y, double rel_tol) {
  check_point(ctx, x);
  check_point(ctx, y);
  if (is_zero(x) || is_zero(y)) throw std::invalid_argument("phi is evaluated only away from the origin");
  const double rho2 = ctx.rho2();
  auto f = [&](std::span<const double> s) {
    double jac = 1.0;
    std::array<double, 3> r{};
    for (std::size_t i = 0; i < 3; ++i) {
      const double q = 1.0 - s[i];
      r[i] = s[i] / q;
      jac /= q * q;
    }
    const double sum = r[0] + r[1] + r[2];
    const double weight = sum * std::exp(-0.5 * rho2 * sum * sum);
    if (weight == 0.0) return 0.0;
    return jac * weight * inner_kernel(ctx, x, y, r[0], r[1], r[2]);
  };
  const std::array<double, 3> lo{0.0, 0.0, 0.0};
  const std::array<double, 3> hi{1.0, 1.0, 1.0};
  const auto res = genz_malik(f, lo, hi, {.rel_tol = rel_tol});
  const double scale = rho2 * rho2;
  return {scale * res.value, scale * res.error, res.evals};
}

double triple_density_mass(double rel_tol) {
  auto f = [](std::span<const double> s) {
    double jac = 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double q = 1.0 - s[i];
      sum += s[i] / q;
      jac /= q * q;
    }
    return jac * 16.0 * sum * std::exp(-2.0 * sum * sum);
  };
  const std::array<double, 3> lo{0.0, 0.0, 0.0};
  const std::array<double, 3> hi{1.0, 1.0, 1.0};
  return genz_malik(f, lo, hi, {.rel_tol = rel_tol}).value;
}

double triple_density_mass_below(double s_max) {
  // Simplex slice area s^2/2: 8 int_0^S s^3 exp(-2 s^2) ds = 1 - (1 + 2 S^2) exp(-2 S^2).
  if (!(s_max > 0.0)) return 0.0;
  const double q = 2.0 * s_max * s_max;
  return 1.0 - (1.0 + q) * std::exp(-q);
}

double hitting_constant(int d, std::span<const double> x, std::span<const double> y) {
  if (d < 1 || d > 3) throw std::invalid_argument("hitting constant needs d in {1, 2, 3}");
  if (x.size() != static_cast<std::size_t>(d) || y.size() != x.size()) throw std::invalid_argument("point dimension mismatch");
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - y[i]) * (x[i] - y[i]);
  if (r2 == 0.0) throw std::invalid_argument("hitting constant needs x != y");
  return (2.0 - 0.5 * d) / r2;
}

double visit_limit_constant(const LimitContext& ctx) { return 2.0 * (4.0 - ctx.dim()) / ctx.rho2(); }

double ito_weight(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("duration must be positive");
  return 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi * r * r * r));
}

}  // namespace treerange
