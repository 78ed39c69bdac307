#include <doctest.h>

#include <cmath>
#include <set>

#include "treerange/alias.hpp"
#include "treerange/parallel.hpp"
#include "treerange/rng.hpp"

using namespace treerange;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(detail::philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(detail::philox4x32_10(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(detail::philox4x32_10(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  Stream a(7, 1);
  Stream b(7, 1);
  Stream c(7, 2);
  Stream d(8, 1);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
  }
  CHECK(trial_stream(1, 2, 3)() == trial_stream(1, 2, 3)());
  CHECK(trial_stream(1, 2, 3)() != trial_stream(1, 2, 4)());
  CHECK(trial_stream(1, 2, 3)() != trial_stream(1, 3, 3)());

  const Stream parent(5, 9);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t tag = 0; tag < 1000; ++tag) firsts.insert(parent.substream(tag)());
  CHECK(firsts.size() == 1000);
}

TEST_CASE("uniform and bounded draws") {
  Stream rng(3, 4);
  constexpr int n = 200000;
  double sum = 0.0;
  std::array<int, 7> counts{};
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    const auto k = rng.below(7);
    REQUIRE(k < 7);
    ++counts[k];
  }
  // mean 1/2, sd 1/sqrt(12 n)
  CHECK(std::abs(sum / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
  const double p = 1.0 / 7.0;
  for (int c : counts) CHECK(std::abs(c - n * p) < 4.0 * std::sqrt(n * p * (1 - p)));
}

TEST_CASE("alias table reproduces its weights") {
  const std::vector<double> w{0.1, 0.0, 0.25, 0.65};
  const AliasTable table(w);
  Stream rng(11, 0);
  constexpr int n = 400000;
  std::array<int, 4> counts{};
  for (int i = 0; i < n; ++i) ++counts[table.sample(rng)];
  CHECK(counts[1] == 0);
  for (std::size_t k = 0; k < w.size(); ++k) CHECK(std::abs(counts[k] - n * w[k]) <= 4.0 * std::sqrt(n * w[k] * (1 - w[k])) + 1e-9);

  const std::vector<double> one{1.0};
  const AliasTable single(one);
  for (int i = 0; i < 100; ++i) CHECK(single.sample(rng) == 0);
}

TEST_CASE("run_trials results do not depend on the worker count") {
  auto body = [](std::size_t i, Stream& rng) { return rng() ^ i; };
  const auto one = run_trials(TrialPlan{42, experiment_tag("t"), 500, 1}, body);
  const auto many = run_trials(TrialPlan{42, experiment_tag("t"), 500, 7}, body);
  CHECK(one == many);
  CHECK_THROWS_AS(run_trials(TrialPlan{1, 1, 10, 3},
                             [](std::size_t i, Stream&) {
                               if (i == 5) throw std::runtime_error("boom");
                               return 0;
                             }),
                  std::runtime_error);
  CHECK(experiment_tag("a") != experiment_tag("b"));
}
