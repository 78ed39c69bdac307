#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "treerange/errors.hpp"
#include "treerange/indexed_walk.hpp"
#include "treerange/stats.hpp"

using namespace treerange;

namespace {

Site site(std::int32_t a, std::int32_t b = 0, std::int32_t c = 0) { return Site{{a, b, c, 0}}; }

TrialPlan plan(std::string_view label, std::size_t trials, unsigned workers = 1, std::uint64_t seed = 99) {
  return TrialPlan{seed, experiment_tag(label), trials, workers};
}

}  // namespace

TEST_CASE("locations follow the tree") {
  Stream rng(11, 1);
  const auto g = OffspringDist::geometric_half();
  const auto theta = JumpDist::lazy_simple(2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto spatial = assign_locations(sample_gw_conditioned(g, 300, rng), theta, rng);
    CHECK(spatial.locations[0] == Site{});
    for (std::size_t v = 1; v < spatial.locations.size(); ++v) {
      const Site step = spatial.locations[v] - spatial.locations[spatial.tree.parent(v)];
      const bool atom = std::any_of(theta.atoms().begin(), theta.atoms().end(), [&](const auto& a) { return a.site == step; });
      REQUIRE(atom);
    }
    const auto field = local_time_field(spatial);
    std::uint64_t total = 0;
    for (const auto& [key, count] : field.counts()) total += count;
    CHECK(total == 300);
    CHECK(field.range() <= 300);
    CHECK(field.at(Site{}) >= 1);
  }
}

TEST_CASE("increments match the jump law") {
  Stream rng(12, 1);
  const auto g = OffspringDist::geometric_half();
  const auto theta = JumpDist::box_minus_center(2);
  std::vector<double> counts(theta.atoms().size(), 0.0);
  for (int rep = 0; rep < 100; ++rep) {
    const auto spatial = assign_locations(sample_gw_conditioned(g, 1000, rng), theta, rng);
    for (std::size_t v = 1; v < spatial.locations.size(); ++v) {
      const Site step = spatial.locations[v] - spatial.locations[spatial.tree.parent(v)];
      for (std::size_t j = 0; j < counts.size(); ++j) counts[j] += theta.atoms()[j].site == step;
    }
  }
  std::vector<double> probs;
  for (const auto& a : theta.atoms()) probs.push_back(a.prob);
  CHECK(chi_square_gof(counts, probs).p_value > 0.001);
}

TEST_CASE("local time field on a fixed tree") {
  // Path of three vertices: every location is determined up to the two increments.
  const PlaneTree path({1, 1, 0});
  const JumpDist right(1, {{site(1), 0.5}, {site(-1), 0.5}});
  Stream rng(13, 1);
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  for (int i = 0; i < 200; ++i) {
    const auto field = local_time_field(assign_locations(path, right, rng));
    CHECK(field.vertices() == 3);
    seen.insert({field.range(), field.at(Site{})});
  }
  // Steps (+,+) and (-,-) give range 3 with one root visit; (+,-) and (-,+) give range 2 with two.
  CHECK(seen == std::set<std::pair<std::uint64_t, std::uint64_t>>{{2, 2}, {3, 1}});
}

TEST_CASE("visit-product distribution at a neighbour, n = 2") {
  // n = 2: a root and one child. With lazy d = 1, L(1) L(1) = 1 iff the step is +1.
  const auto g = OffspringDist::geometric_half();
  const auto theta = JumpDist::lazy_simple(1);
  const auto lt = local_time_moment(g, theta, 2, site(1), site(1), plan("lt2", 40000));
  const double p = 0.25;
  CHECK(std::abs(lt.scaled.mean * std::pow(2.0, 1.5) - p) < 4.0 * std::sqrt(p * (1 - p) / 40000));
  CHECK_THROWS_AS(local_time_moment(g, theta, 2, Site{}, site(1), plan("lt2", 10)), std::invalid_argument);
  CHECK_THROWS_AS(local_time_moment(OffspringDist::binary(), theta, 4, site(1), site(1), plan("lt2", 10)), UnreachableSize);
}

TEST_CASE("range bounds and scaling") {
  const auto g = OffspringDist::geometric_half();
  const auto theta = JumpDist::lazy_simple(2);
  const auto r = scaled_range_sample(g, theta, 500, plan("range", 50));
  REQUIRE(r.range.size() == 50);
  for (std::size_t i = 0; i < r.range.size(); ++i) {
    CHECK(r.range[i] >= 1);
    CHECK(r.range[i] <= 500);
    CHECK(r.scaled[i] == doctest::Approx(static_cast<double>(r.range[i]) / std::sqrt(500.0)));
  }
  const auto one = scaled_range_sample(g, theta, 1, plan("range1", 5));
  for (auto v : one.range) CHECK(v == 1);
}

TEST_CASE("results do not depend on the worker count") {
  const auto g = OffspringDist::geometric_half();
  const auto theta = JumpDist::lazy_simple(2);
  const auto a = scaled_range_sample(g, theta, 400, plan("det", 40, 1));
  const auto b = scaled_range_sample(g, theta, 400, plan("det", 40, 4));
  CHECK(a.range == b.range);
  const auto h1 = estimate_hitting_prob(g, theta, site(3, 0), 20000, plan("deth", 3000, 1));
  const auto h3 = estimate_hitting_prob(g, theta, site(3, 0), 20000, plan("deth", 3000, 3));
  CHECK(h1.hits == h3.hits);
  CHECK(h1.batch_hits == h3.batch_hits);
  CHECK(h1.batch_hits.size() == 3);
  const auto other = scaled_range_sample(g, theta, 400, plan("det", 40, 1, 100));
  CHECK(other.range != a.range);
}

TEST_CASE("hitting estimates") {
  const auto g = OffspringDist::geometric_half();
  const auto theta = JumpDist::lazy_simple(1);
  CHECK_THROWS_AS(estimate_hitting_prob(g, theta, Site{}, 10, plan("h", 10)), std::invalid_argument);
  CHECK_THROWS_AS(estimate_hitting_prob(g, theta, site(1), 0, plan("h", 10)), std::invalid_argument);

  // Independent oracle: store each tree, assign locations, then search.
  const auto est = estimate_hitting_prob(g, theta, site(1), 100000, plan("h1", 20000));
  Stream rng(14, 2);
  int hits = 0;
  constexpr int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto out = sample_gw_unconditioned(g, 100000, rng);
    const auto* tree = std::get_if<PlaneTree>(&out);
    if (tree == nullptr) continue;
    const auto spatial = assign_locations(*tree, theta, rng);
    hits += std::find(spatial.locations.begin(), spatial.locations.end(), site(1)) != spatial.locations.end();
  }
  const double q = static_cast<double>(hits) / n;
  CHECK(z_score(est.p_hat, est.se, q, std::sqrt(q * (1 - q) / n)) < 4.0);
  CHECK(est.capped_fraction < 0.01);

  // Cap monotonicity: a tighter cap can only turn hits into caps.
  const auto tight = estimate_hitting_prob(g, theta, site(4), 20, plan("hcap", 5000));
  const auto loose = estimate_hitting_prob(g, theta, site(4), 20000, plan("hcap", 5000));
  CHECK(tight.hits <= loose.hits);
  CHECK(tight.capped >= loose.capped);
  CHECK(tight.hits + tight.capped >= loose.hits);
  CHECK(default_hitting_cap(site(3, 4)) == 125000);
}

TEST_CASE("branching walk from p ancestors") {
  const auto g = OffspringDist::geometric_half();
  const auto theta = JumpDist::lazy_simple(2);
  Stream rng(15, 3);
  const auto v1 = brw_visited(1, g, theta, 100000, rng);
  CHECK(v1.contains(Site{}));
  const auto v5 = brw_visited(5, g, theta, 100000, rng);
  for (auto key : v1.sites) CHECK(v5.sites.count(key) == 1);
  CHECK_THROWS_AS(brw_visited(0, g, theta, 10, rng), std::invalid_argument);

  const auto same = brw_hit_identity_check(site(2, 0), 1, g, theta, 100000, plan("lhs", 4096), plan("lhs", 4096, 1, 5));
  CHECK(same.rhs == doctest::Approx(same.single.p_hat));
  CHECK(same.z < 4.0);
  CHECK_THROWS_AS(brw_hit_identity_check(site(2, 0), 2, g, theta, 100, plan("x", 10), plan("x", 10)), std::invalid_argument);

  const auto id = brw_hit_identity_check(site(2, 0), 4, g, theta, 100000, plan("lhs", 8192), plan("rhs", 8192));
  CHECK(id.rhs >= 0.0);
  CHECK(id.rhs <= 1.0);
  CHECK(id.rhs >= id.single.p_hat);
  CHECK(std::abs(id.z) < 4.0);
}
