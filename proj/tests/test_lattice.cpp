#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "treerange/errors.hpp"
#include "treerange/lattice.hpp"
#include "treerange/stats.hpp"

using namespace treerange;

namespace {

Site site(std::int32_t a, std::int32_t b = 0, std::int32_t c = 0, std::int32_t d = 0) { return Site{{a, b, c, d}}; }

}  // namespace

TEST_CASE("jump law validation") {
  CHECK_THROWS_AS(JumpDist(1, {{site(0), 1.0}}), InvalidDistribution);
  CHECK_THROWS_AS(JumpDist(1, {{site(1), 0.5}, {site(-1), 0.4}}), InvalidDistribution);
  CHECK_THROWS_AS(JumpDist(1, {{site(1), 0.5}, {site(-2), 0.5}}), InvalidDistribution);
  CHECK_THROWS_AS(JumpDist(1, {{site(2), 0.5}, {site(-2), 0.5}}), InvalidDistribution);  // 2Z
  CHECK_THROWS_AS(JumpDist(1, {{site(1, 1), 0.5}, {site(-1, -1), 0.5}}), InvalidDistribution);
  CHECK_THROWS_AS(JumpDist(2, {{site(1, 1), 0.5}, {site(-1, -1), 0.5}}), InvalidDistribution);  // singular covariance
  CHECK_THROWS_AS(JumpDist::lazy_simple(2, 0.0), InvalidDistribution);
  CHECK_THROWS_AS(JumpDist::lazy_simple(2, 1.0), InvalidDistribution);
  CHECK_THROWS_AS(JumpDist::lazy_simple(5), std::invalid_argument);

  const JumpDist simple(1, {{site(1), 0.5}, {site(-1), 0.5}});
  CHECK_FALSE(simple.aperiodic());
  CHECK(return_time_gcd(simple) == 2);
  CHECK(JumpDist::lazy_simple(1).aperiodic());
  CHECK(return_time_gcd(JumpDist::lazy_simple(3)) == 1);
  CHECK(JumpDist::box_minus_center(2).aperiodic());
}

TEST_CASE("covariance and sigma") {
  for (int d = 1; d <= 4; ++d) {
    const auto lazy = JumpDist::lazy_simple(d);
    CHECK(lazy.covariance().isApprox(Eigen::MatrixXd::Identity(d, d) * (0.5 / d)));
    CHECK(lazy.sigma() == doctest::Approx(std::sqrt(0.5 / d)));
    CHECK(lazy.isotropic());
    CHECK(lazy.symmetric());
    const auto product = JumpDist::lazy_product(d);
    CHECK(product.covariance().isApprox(Eigen::MatrixXd::Identity(d, d) * 0.5));
  }
  const auto held = JumpDist::lazy_simple(2, 0.75);
  CHECK(held.covariance()(0, 0) == doctest::Approx(0.125));
  // Box {-1,0,1}^2 without the centre: each coordinate has variance 6/8.
  CHECK(JumpDist::box_minus_center(2).covariance()(0, 0) == doctest::Approx(0.75));
  CHECK(JumpDist::box_minus_center(2).covariance()(0, 1) == doctest::Approx(0.0));

  const JumpDist skew(2, {{site(1, 0), 0.25}, {site(-1, 0), 0.25}, {site(1, 1), 0.25}, {site(-1, -1), 0.25}});
  CHECK_FALSE(skew.isotropic());
  CHECK(skew.covariance()(0, 1) == doctest::Approx(0.5));
  CHECK(skew.sigma() == doctest::Approx(std::pow(0.25, 0.25)));
}

TEST_CASE("convolution powers") {
  const auto lazy = JumpDist::lazy_simple(1);
  const auto p2 = conv_power(lazy, 2, 2);
  CHECK(p2.at(site(0)) == doctest::Approx(3.0 / 8.0).epsilon(1e-15));
  CHECK(p2.at(site(1)) == doctest::Approx(1.0 / 4.0).epsilon(1e-15));
  CHECK(p2.at(site(-2)) == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  CHECK(p2.at(site(3)) == 0.0);
  CHECK(conv_power(lazy, 0, 1).at(site(0)) == 1.0);

  // Binomial closed form: the lazy 1-D walk is Bin(2k, 1/2) - k.
  const int k = 30;
  const auto pk = conv_power(lazy, k, k);
  for (int a = -k; a <= k; ++a) {
    const double exact = std::exp(std::lgamma(2 * k + 1) - std::lgamma(k + a + 1) - std::lgamma(k - a + 1) - 2 * k * std::log(2.0));
    CHECK(pk.at(site(a)) == doctest::Approx(exact).epsilon(1e-12));
  }

  const auto box = JumpDist::box_minus_center(2);
  const auto f = conv_power(box, 6, 6);
  CHECK(f.total() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(f.escaped_mass == doctest::Approx(0.0).epsilon(1e-15));
  for (std::size_t i = 0; i < f.cells(); ++i) {
    const Site s = f.site(i);
    CHECK(f.at(s) == doctest::Approx(f.at(site(-s.x[0], -s.x[1]))).epsilon(1e-13));
    CHECK(f.at(s) == doctest::Approx(f.at(site(s.x[1], s.x[0]))).epsilon(1e-13));
  }

  const auto clipped = conv_power(box, 6, 3);
  CHECK(clipped.total() + clipped.escaped_mass == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(clipped.escaped_mass > 0.0);
}

TEST_CASE("Gaussian kernel") {
  Eigen::MatrixXd m(2, 2);
  m << 2.0, 0.5, 0.5, 1.0;
  const GaussianKernel g(m);
  const double origin[2] = {0.0, 0.0};
  CHECK(g(1.0, origin) == doctest::Approx(1.0 / (2 * std::numbers::pi * std::sqrt(1.75))));
  CHECK(g(4.0, origin) == doctest::Approx(g(1.0, origin) / 4.0));

  // Riemann sum of the density over a large grid.
  double total = 0.0;
  const double step = 0.05;
  for (double x = -15; x <= 15; x += step) {
    for (double y = -12; y <= 12; y += step) {
      const double p[2] = {x, y};
      total += g(1.3, p) * step * step;
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));

  const double v[2] = {1.0, -1.0};
  CHECK(g.quadratic(v) == doctest::Approx(4.0 / 1.75));
}

TEST_CASE("local limit deviation") {
  CHECK_THROWS_AS(llt_deviation(JumpDist(1, {{site(1), 0.5}, {site(-1), 0.5}}), 10), PeriodicJump);
  const auto lazy = JumpDist::lazy_simple(2);
  const double d12 = llt_deviation(lazy, 12);
  const double d50 = llt_deviation(lazy, 50);
  const double d200 = llt_deviation(lazy, 200);
  CHECK(d50 < d12);
  CHECK(d200 < d50);
  CHECK(d200 < 0.05);

  // n = 1, d = 1, hold 1/2: the sup is attained over {0, +-1}, computed by hand.
  const auto one = JumpDist::lazy_simple(1);
  const double p0 = 1.0 / std::sqrt(2 * std::numbers::pi * 0.5);
  const double p1 = p0 * std::exp(-1.0);
  const double expected = std::max({std::abs(0.5 - p0), 2.0 * std::abs(0.25 - p1), 5.0 * std::abs(0.0 - p1 * std::exp(-3.0))});
  CHECK(llt_deviation(one, 1, 2) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("jump sampling frequencies") {
  const auto theta = JumpDist::box_minus_center(2);
  Stream rng(7, 7);
  std::vector<double> counts(theta.atoms().size(), 0.0);
  constexpr int n = 200000;
  for (int i = 0; i < n; ++i) {
    const Site s = theta.sample(rng);
    for (std::size_t j = 0; j < counts.size(); ++j) {
      if (theta.atoms()[j].site == s) counts[j] += 1.0;
    }
  }
  std::vector<double> probs;
  for (const auto& a : theta.atoms()) probs.push_back(a.prob);
  CHECK(chi_square_gof(counts, probs).p_value > 0.001);
}

TEST_CASE("pmf text round trip") {
  std::istringstream in("# skewed law\n1 0 0.25\n-1 0 0.25\n 1 1 0.25\n-1 -1 0.25\n");
  const auto theta = JumpDist::parse(in);
  CHECK(theta.dim() == 2);
  std::ostringstream out;
  theta.write(out);
  std::istringstream back(out.str());
  const auto again = JumpDist::parse(back);
  REQUIRE(again.atoms().size() == theta.atoms().size());
  for (std::size_t i = 0; i < theta.atoms().size(); ++i) {
    CHECK(again.atoms()[i].site == theta.atoms()[i].site);
    CHECK(again.atoms()[i].prob == theta.atoms()[i].prob);
  }
  std::istringstream bad("1 0.5\n-1 x\n");
  CHECK_THROWS_AS(JumpDist::parse(bad), InvalidDistribution);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(JumpDist::parse(empty), InvalidDistribution);
}

TEST_CASE("site packing") {
  for (int d = 1; d <= 4; ++d) {
    const Site s = d == 4 ? site(-32768, 32767, 5, -1) : site(-(1 << 20), (1 << 20) - 1, 17);
    Site t{};
    for (int i = 0; i < d; ++i) t.x[static_cast<std::size_t>(i)] = s.x[static_cast<std::size_t>(i)];
    CHECK(unpack_site(pack_site(t, d), d) == t);
  }
  CHECK_THROWS_AS(pack_site(site(1 << 20), 1), std::overflow_error);
  CHECK(pack_site(site(1, 0), 2) != pack_site(site(0, 1), 2));
  CHECK(generates_lattice(std::vector<Site>{site(2, 1), site(1, 1)}, 2));
  CHECK_FALSE(generates_lattice(std::vector<Site>{site(2, 0), site(0, 1)}, 2));
}
