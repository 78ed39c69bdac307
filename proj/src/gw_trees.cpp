#include "treerange/gw_trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "treerange/errors.hpp"

namespace treerange {

namespace {

constexpr double kTolerance = 1e-12;
constexpr double kTruncationTail = 1e-15;

std::vector<double> truncate_tail(std::vector<double> pmf) {
  // Drop the atoms whose cumulative tail mass is below kTruncationTail, then
  // renormalize so the law still sums to one.
  double tail = 0.0;
  std::size_t keep = pmf.size();
  while (keep > 1 && tail + pmf[keep - 1] < kTruncationTail) {
    tail += pmf[keep - 1];
    --keep;
  }
  pmf.resize(keep);
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (auto& p : pmf) p /= total;
  return pmf;
}

}  // namespace

OffspringDist::OffspringDist(std::vector<double> pmf) : pmf_(std::move(pmf)) {
  if (pmf_.empty()) throw InvalidDistribution("offspring pmf is empty");
  double total = 0.0;
  for (double p : pmf_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidDistribution("offspring pmf has a negative or non-finite entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kTolerance) {
    throw InvalidDistribution("offspring pmf sums to " + std::to_string(total) + ", not 1");
  }
  while (pmf_.size() > 1 && pmf_.back() == 0.0) pmf_.pop_back();

  double second = 0.0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    mean_ += static_cast<double>(k) * pmf_[k];
    second += static_cast<double>(k * k) * pmf_[k];
  }
  if (std::abs(mean_ - 1.0) > kTolerance) {
    throw InvalidDistribution("offspring law is not critical: mean " + std::to_string(mean_));
  }
  rho2_ = second - mean_ * mean_;
  if (!(rho2_ > kTolerance)) throw InvalidDistribution("offspring law is degenerate (variance 0)");

  std::uint64_t g = 0;
  std::size_t first = pmf_.size();
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    if (pmf_[k] <= 0.0) continue;
    if (first == pmf_.size()) {
      first = k;
    } else {
      g = std::gcd(g, static_cast<std::uint64_t>(k - first));
    }
  }
  aperiodic_ = (g == 1);
  table_ = AliasTable(pmf_);
}

OffspringDist OffspringDist::geometric_half() {
  std::vector<double> pmf;
  double p = 0.5;
  for (int k = 0; k < 64; ++k, p *= 0.5) pmf.push_back(p);
  return OffspringDist(truncate_tail(std::move(pmf)));
}

OffspringDist OffspringDist::binary() { return OffspringDist({0.5, 0.0, 0.5}); }

OffspringDist OffspringDist::poisson_one() {
  std::vector<double> pmf;
  double p = std::exp(-1.0);
  for (int k = 0; k < 40; ++k) {
    pmf.push_back(p);
    p /= (k + 1);
  }
  return OffspringDist(truncate_tail(std::move(pmf)));
}

double OffspringDist::rho() const noexcept { return std::sqrt(rho2_); }

bool is_lukasiewicz(std::span<const std::uint32_t> child_counts) noexcept {
  if (child_counts.empty()) return false;
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < child_counts.size(); ++i) {
    sum += static_cast<std::int64_t>(child_counts[i]) - 1;
    if (i + 1 < child_counts.size() && sum < 0) return false;
  }
  return sum == -1;
}

PlaneTree::PlaneTree(std::vector<std::uint32_t> child_counts) : child_counts_(std::move(child_counts)) {
  if (!is_lukasiewicz(child_counts_)) throw std::invalid_argument("child counts are not a Lukasiewicz word");
  const std::size_t n = child_counts_.size();
  parent_.assign(n, 0);
  height_.assign(n, 0);
  // Stack of (vertex, children still to visit).
  std::vector<std::pair<std::uint32_t, std::uint32_t>> open;
  open.emplace_back(0, child_counts_[0]);
  for (std::uint32_t v = 1; v < n; ++v) {
    while (open.back().second == 0) open.pop_back();
    auto& top = open.back();
    --top.second;
    parent_[v] = top.first;
    height_[v] = height_[top.first] + 1;
    open.emplace_back(v, child_counts_[v]);
  }
}

std::uint32_t PlaneTree::max_height() const noexcept { return *std::max_element(height_.begin(), height_.end()); }

GwOutcome sample_gw_unconditioned(const OffspringDist& mu, std::size_t cap, Stream& rng) {
  if (cap == 0) throw std::invalid_argument("cap must be at least 1");
  std::vector<std::uint32_t> counts;
  std::int64_t pending = 1;
  while (pending > 0) {
    if (counts.size() == cap) return CapExceeded{cap};
    const auto k = mu.sample(rng);
    counts.push_back(k);
    pending += static_cast<std::int64_t>(k) - 1;
  }
  return PlaneTree(std::move(counts));
}

bool size_reachable(const OffspringDist& mu, std::size_t n) {
  if (n == 0) return false;
  const auto pmf = mu.pmf();
  if (pmf[0] <= 0.0) return false;
  const std::size_t target = n - 1;
  // Every positive offspring value is >= 1, so any representation of n - 1 by
  // positive values has at most n - 1 terms; zeros fill the remaining slots.
  std::vector<char> reach(target + 1, 0);
  reach[0] = 1;
  for (std::size_t s = 1; s <= target; ++s) {
    for (std::size_t k = 1; k < pmf.size() && k <= s; ++k) {
      if (pmf[k] > 0.0 && reach[s - k]) {
        reach[s] = 1;
        break;
      }
    }
  }
  return reach[target] != 0;
}

PlaneTree sample_gw_conditioned(const OffspringDist& mu, std::size_t n, Stream& rng) {
  if (n == 0) throw UnreachableSize("tree size must be positive");
  if (!size_reachable(mu, n)) throw UnreachableSize("P(#T = " + std::to_string(n) + ") = 0 for this offspring law");
  if (n == 1) return PlaneTree({0});

  const auto pmf = mu.pmf();
  const std::size_t kmax = pmf.size() - 1;
  const auto target = static_cast<std::int64_t>(n - 1);
  std::vector<std::int64_t> count(kmax + 1, 0);

  std::vector<double> cumulative(kmax + 1);
  std::partial_sum(pmf.begin(), pmf.end(), cumulative.begin());

  for (;;) {
    // Sequential binomials, largest category first: N_k ~ Bin(left, mu(k) / mu([0, k])).
    std::int64_t left = static_cast<std::int64_t>(n);
    std::int64_t total = 0;
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t k = kmax; k >= 1 && left > 0 && total <= target; --k) {
      if (pmf[k] <= 0.0) continue;
      std::binomial_distribution<std::int64_t> draw(left, std::min(1.0, pmf[k] / cumulative[k]));
      count[k] = draw(rng);
      left -= count[k];
      total += static_cast<std::int64_t>(k) * count[k];
    }
    if (total == target) {
      count[0] = left;
      break;
    }
  }

  std::vector<std::uint32_t> values;
  values.reserve(n);
  for (std::size_t k = 0; k <= kmax; ++k) values.insert(values.end(), static_cast<std::size_t>(count[k]), static_cast<std::uint32_t>(k));
  for (std::size_t i = n - 1; i > 0; --i) std::swap(values[i], values[rng.below(i + 1)]);

  // Cycle lemma: rotate to start right after the first minimum of the walk.
  std::int64_t walk = 0;
  std::int64_t lowest = 1;
  std::size_t start = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    walk += static_cast<std::int64_t>(values[j - 1]) - 1;
    if (walk < lowest) {
      lowest = walk;
      start = j % n;
    }
  }
  std::rotate(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(start), values.end());
  return PlaneTree(std::move(values));
}

std::vector<double> total_progeny_pmf(const OffspringDist& mu, std::size_t n_max) {
  if (n_max == 0) throw std::invalid_argument("n_max must be at least 1");
  const auto pmf = mu.pmf();
  std::vector<double> out(n_max);
  // power[s] = mu^{*j}(s), kept on s <= n_max - 1, the only values that can
  // still reach s = n - 1 for some n <= n_max.
  std::vector<double> power(n_max, 0.0);
  std::vector<double> next(n_max, 0.0);
  power[0] = 1.0;
  for (std::size_t j = 1; j <= n_max; ++j) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < n_max; ++s) {
      const double base = power[s];
      if (base == 0.0) continue;
      const std::size_t reach = std::min(pmf.size(), n_max - s);
      for (std::size_t k = 0; k < reach; ++k) next[s + k] += base * pmf[k];
    }
    power.swap(next);
    out[j - 1] = power[j - 1] / static_cast<double>(j);
  }
  return out;
}

double kemperman_ratio(const OffspringDist& mu, std::size_t k) {
  if (!mu.aperiodic()) throw PeriodicOffspring("offspring law is periodic; use the tail form instead");
  if (k == 0) throw std::invalid_argument("k must be positive");
  const double pk = total_progeny_pmf(mu, k).back();
  const double kd = static_cast<double>(k);
  return kd * std::sqrt(kd) * pk * mu.rho() * std::sqrt(2.0 * M_PI);
}

MrcaDistance mrca_and_distance(const PlaneTree& tree, std::size_t i, std::size_t j) {
  if (i >= tree.size() || j >= tree.size()) throw std::out_of_range("vertex index out of range");
  const auto parents = tree.parents();
  const auto heights = tree.heights();
  auto u = static_cast<std::uint32_t>(i);
  auto v = static_cast<std::uint32_t>(j);
  while (u != v) {
    if (heights[u] >= heights[v]) {
      u = parents[u];
    } else {
      v = parents[v];
    }
  }
  const std::uint32_t m = heights[u];
  return {m, heights[i] + heights[j] - 2 * m};
}

std::vector<std::uint64_t> distance_profile(const PlaneTree& tree, std::size_t k_max) {
  if (k_max == 0) throw std::invalid_argument("k_max must be at least 1");
  const std::size_t n = tree.size();
  std::vector<std::vector<std::uint32_t>> adjacent(n);
  for (std::uint32_t v = 1; v < n; ++v) {
    adjacent[v].push_back(tree.parent(v));
    adjacent[tree.parent(v)].push_back(v);
  }
  std::vector<std::uint64_t> profile(k_max + 1, 0);
  std::vector<std::uint32_t> dist(n);
  std::vector<std::uint32_t> queue(n);
  constexpr auto kUnseen = static_cast<std::uint32_t>(-1);
  for (std::uint32_t source = 0; source < n; ++source) {
    std::fill(dist.begin(), dist.end(), kUnseen);
    std::size_t head = 0;
    std::size_t tail = 0;
    queue[tail++] = source;
    dist[source] = 0;
    while (head < tail) {
      const auto v = queue[head++];
      if (dist[v] > k_max) break;
      ++profile[dist[v]];
      for (auto w : adjacent[v]) {
        if (dist[w] == kUnseen) {
          dist[w] = dist[v] + 1;
          queue[tail++] = w;
        }
      }
    }
  }
  return profile;
}

}  // namespace treerange
