#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "treerange/errors.hpp"
#include "treerange/limits.hpp"
#include "treerange/rng.hpp"

using namespace treerange;

namespace {

double gauss1(double t, double x, double var) { return std::exp(-x * x / (2 * t * var)) / std::sqrt(2 * std::numbers::pi * t * var); }

// int dz p_{r1}(z) p_{r2}(x - z) p_{r3}(y - z) by the trapezoid rule in d = 1.
double inner_by_grid(double x, double y, double r1, double r2, double r3, double var) {
  const double half = 30.0;
  const int points = 600000;
  const double h = 2 * half / points;
  double sum = 0.0;
  for (int i = 0; i <= points; ++i) {
    const double z = -half + i * h;
    const double w = (i == 0 || i == points) ? 0.5 : 1.0;
    sum += w * gauss1(r1, z, var) * gauss1(r2, x - z, var) * gauss1(r3, y - z, var);
  }
  return sum * h;
}

// Same integral in d = 2 for a general covariance, on a square grid.
double inner_by_grid_2d(const LimitContext& ctx, const double* x, const double* y, double r1, double r2, double r3) {
  const double half = 12.0;
  const int points = 1200;
  const double h = 2 * half / points;
  double sum = 0.0;
  for (int i = 0; i <= points; ++i) {
    for (int j = 0; j <= points; ++j) {
      const double z[2] = {-half + i * h, -half + j * h};
      const double a[2] = {x[0] - z[0], x[1] - z[1]};
      const double b[2] = {y[0] - z[0], y[1] - z[1]};
      const double w = ((i == 0 || i == points) ? 0.5 : 1.0) * ((j == 0 || j == points) ? 0.5 : 1.0);
      sum += w * ctx.kernel()(r1, z) * ctx.kernel()(r2, a) * ctx.kernel()(r3, b);
    }
  }
  return sum * h * h;
}

// phi as an expectation: the weight rho^4 S exp(-rho^2 S^2 / 2) on R_+^3 is a
// probability density with rho^2 S^2 / 2 ~ Gamma(2, 1) and r / S uniform on
// the simplex.
std::pair<double, double> phi_by_sampling(const LimitContext& ctx, std::span<const double> x, std::span<const double> y, int n) {
  Stream rng(31, 1);
  std::gamma_distribution<double> gamma(2.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  double sum = 0.0;
  double sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s = std::sqrt(2.0 * gamma(rng)) / ctx.rho();
    const double e1 = expo(rng);
    const double e2 = expo(rng);
    const double e3 = expo(rng);
    const double total = e1 + e2 + e3;
    const double k = inner_kernel(ctx, x, y, s * e1 / total, s * e2 / total, s * e3 / total);
    sum += k;
    sum2 += k * k;
  }
  const double mean = sum / n;
  return {mean, std::sqrt((sum2 / n - mean * mean) / n)};
}

}  // namespace

TEST_CASE("scaling constants") {
  const auto g = OffspringDist::geometric_half();
  const LimitContext ctx(g, JumpDist::lazy_simple(2));
  CHECK(ctx.sigma() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(ctx.c() == doctest::Approx(std::sqrt(std::sqrt(2.0) / 2.0) / 0.5).epsilon(1e-12));
  CHECK(ctx.c() == doctest::Approx(1.68179).epsilon(1e-5));
  CHECK(visit_limit_constant(ctx) == doctest::Approx(2.0));
  const LimitContext d3(1.0, Eigen::MatrixXd::Identity(3, 3));
  CHECK(visit_limit_constant(d3) == doctest::Approx(2.0));
  CHECK(d3.c() == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(LimitContext(1.0, Eigen::MatrixXd::Identity(4, 4)), std::invalid_argument);
  CHECK_THROWS_AS(LimitContext(0.0, Eigen::MatrixXd::Identity(2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(LimitContext(1.0, -Eigen::MatrixXd::Identity(2, 2)), std::invalid_argument);

  const double x[2] = {1.0, 2.0};
  const double y[2] = {4.0, 6.0};
  CHECK(hitting_constant(2, x, y) == doctest::Approx(1.0 / 25.0));
  CHECK(hitting_constant(1, std::span<const double>(x, 1), std::span<const double>(y, 1)) == doctest::Approx(1.5 / 9.0));
  CHECK_THROWS_AS(hitting_constant(2, x, x), std::invalid_argument);
  CHECK(ito_weight(1.0) == doctest::Approx(1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi))));
  CHECK(ito_weight(4.0) == doctest::Approx(ito_weight(1.0) / 8.0));
  CHECK_THROWS_AS(ito_weight(0.0), std::invalid_argument);
}

TEST_CASE("inner kernel against a spatial grid") {
  const LimitContext one(2.0, Eigen::MatrixXd::Constant(1, 1, 0.7));
  const double cases[][5] = {{0.8, -0.3, 0.5, 1.2, 0.9}, {2.0, 1.5, 0.1, 0.1, 3.0}, {-1.0, 0.4, 2.5, 0.3, 0.05}};
  for (const auto& c : cases) {
    const double k = inner_kernel(one, std::span<const double>(&c[0], 1), std::span<const double>(&c[1], 1), c[2], c[3], c[4]);
    CHECK(k == doctest::Approx(inner_by_grid(c[0], c[1], c[2], c[3], c[4], 0.7)).epsilon(1e-8));
  }

  Eigen::MatrixXd m(2, 2);
  m << 0.6, 0.2, 0.2, 0.3;
  const LimitContext two(2.0, m);
  const double x[2] = {0.5, -0.2};
  const double y[2] = {-0.4, 0.6};
  CHECK(inner_kernel(two, x, y, 0.7, 0.4, 0.9) == doctest::Approx(inner_by_grid_2d(two, x, y, 0.7, 0.4, 0.9)).epsilon(1e-7));
  CHECK(inner_kernel(two, x, y, 0.0, 0.0, 1.0) == 0.0);

  // psi re-parametrizes the three durations.
  CHECK(psi(two, x, y, 1.1, 1.6, 0.7) == doctest::Approx(inner_kernel(two, x, y, 0.7, 0.4, 0.9)));
  CHECK_THROWS_AS(psi(two, x, y, 1.0, 2.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(psi(two, x, y, 1.0, 2.0, -0.1), std::invalid_argument);
}

TEST_CASE("phi against sampling") {
  const LimitContext ctx(2.0, Eigen::MatrixXd::Identity(2, 2) * 0.25);
  const double x[2] = {0.5, 0.0};
  const double y[2] = {0.0, 0.5};
  const auto q = phi(ctx, x, y, 1e-6);
  const auto [mc, se] = phi_by_sampling(ctx, x, y, 400000);
  CHECK(std::abs(q.value - mc) < 4.0 * se);
  CHECK(q.error <= 1e-6 * q.value * 1.0001);

  const LimitContext line(1.0, Eigen::MatrixXd::Constant(1, 1, 1.0));
  const double a[1] = {0.7};
  const double b[1] = {-0.4};
  const auto q1 = phi(line, a, b, 1e-6);
  const auto [mc1, se1] = phi_by_sampling(line, a, b, 400000);
  CHECK(std::abs(q1.value - mc1) < 4.0 * se1);
}

TEST_CASE("phi structure") {
  const LimitContext ctx(2.0, Eigen::MatrixXd::Identity(2, 2) * 0.25);
  const double x[2] = {0.5, 0.1};
  const double y[2] = {-0.2, 0.6};
  const double v = phi(ctx, x, y).value;
  CHECK(v > 0.0);
  CHECK(phi(ctx, y, x).value == doctest::Approx(v).epsilon(1e-5));
  // Rotation by 90 degrees leaves an isotropic kernel unchanged.
  const double rx[2] = {-0.1, 0.5};
  const double ry[2] = {-0.6, -0.2};
  CHECK(phi(ctx, rx, ry).value == doctest::Approx(v).epsilon(1e-5));
  CHECK(phi(ctx, x, y, 1e-8).value == doctest::Approx(v).epsilon(2e-6));
  const double zero[2] = {0.0, 0.0};
  CHECK_THROWS_AS(phi(ctx, zero, y), std::invalid_argument);
  const double three[3] = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(phi(ctx, three, three), std::invalid_argument);

  // Farther targets get less weight.
  const double far[2] = {2.0, 0.0};
  CHECK(phi(ctx, far, far).value < phi(ctx, x, x).value);
}

TEST_CASE("triple density") {
  CHECK(triple_density_mass() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(triple_density_mass_below(0.0) == doctest::Approx(0.0));
  CHECK(triple_density_mass_below(10.0) == doctest::Approx(1.0).epsilon(1e-14));
  // Its derivative is the density of S = r1 + r2 + r3, 16 s (s^2 / 2) e^{-2 s^2}.
  for (double s : {0.2, 0.7, 1.5}) {
    const double h = 1e-5;
    const double slope = (triple_density_mass_below(s + h) - triple_density_mass_below(s - h)) / (2 * h);
    CHECK(slope == doctest::Approx(8.0 * s * s * s * std::exp(-2.0 * s * s)).epsilon(1e-7));
  }
}

TEST_CASE("cubature rule") {
  const double lo[3] = {0.0, 0.0, 0.0};
  const double hi[3] = {1.0, 1.0, 1.0};
  const auto poly = genz_malik([](std::span<const double> p) { return p[0] * p[0] * p[0] * p[1] * p[1] * p[2] * p[2]; }, lo, hi);
  CHECK(poly.value == doctest::Approx(1.0 / 36.0).epsilon(1e-7));
  // Both embedded rules are exact up to degree 5, so one region suffices.
  const auto quintic = genz_malik([](std::span<const double> p) { return p[0] * p[0] * p[0] * p[1] * p[2]; }, lo, hi);
  CHECK(quintic.value == doctest::Approx(1.0 / 16.0).epsilon(1e-14));
  CHECK(quintic.regions == 1);

  const double glo[2] = {-3.0, -3.0};
  const double ghi[2] = {3.0, 3.0};
  const auto gauss = genz_malik([](std::span<const double> p) { return std::exp(-p[0] * p[0] - p[1] * p[1]); }, glo, ghi, {.rel_tol = 1e-10});
  const double exact = std::numbers::pi * std::erf(3.0) * std::erf(3.0);
  CHECK(gauss.value == doctest::Approx(exact).epsilon(1e-9));

  const double plo[5] = {0, 0, 0, 0, 0};
  const double phi_[5] = {1, 2, 1, 1, 1};
  const auto five = genz_malik([](std::span<const double> p) { return std::cos(p[0] + p[1] + p[2] + p[3] + p[4]); }, plo, phi_, {.rel_tol = 1e-7});
  // Re prod_k (e^{i b_k} - 1) / i with b = (1, 2, 1, 1, 1).
  std::complex<double> z(1.0, 0.0);
  for (double b : {1.0, 2.0, 1.0, 1.0, 1.0}) z *= (std::exp(std::complex<double>(0.0, b)) - 1.0) / std::complex<double>(0.0, 1.0);
  CHECK(five.value == doctest::Approx(z.real()).epsilon(1e-7));

  const auto kink = [](std::span<const double> p) { return 1.0 / std::sqrt(std::abs(p[0] - 0.3) + 1e-12); };
  CHECK_THROWS_AS(genz_malik(kink, glo, ghi, {.rel_tol = 1e-12, .max_evals = 2000}), QuadratureNotConverged);
  CHECK_THROWS_AS(genz_malik(kink, std::span<const double>(lo, 1), std::span<const double>(hi, 1)), std::invalid_argument);
  const double flat[2] = {1.0, 0.0};
  CHECK_THROWS_AS(genz_malik(kink, flat, std::span<const double>(hi, 2)), std::invalid_argument);
}
