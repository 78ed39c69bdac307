#pragma once

// Plane trees in Lukasiewicz (DFS child-count) encoding and Galton-Watson
// samplers, conditioned and unconditioned, plus exact total-progeny laws.

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "treerange/alias.hpp"
#include "treerange/rng.hpp"

namespace treerange {

/// Critical, nondegenerate offspring law on {0, ..., K}.
class OffspringDist {
 public:
  /// Validates normalization and criticality (1e-12) and rho^2 > 0.
  explicit OffspringDist(std::vector<double> pmf);

  /// Geometric with parameter 1/2, mu(k) = 2^{-(k+1)}, truncated where the
  /// tail drops below 1e-15. Conditioned trees are uniform plane trees.
  static OffspringDist geometric_half();
  /// mu(0) = mu(2) = 1/2.
  static OffspringDist binary();
  /// Poisson(1), truncated like geometric_half().
  static OffspringDist poisson_one();

  std::span<const double> pmf() const noexcept { return pmf_; }
  std::size_t max_offspring() const noexcept { return pmf_.size() - 1; }
  double mean() const noexcept { return mean_; }
  double rho2() const noexcept { return rho2_; }
  double rho() const noexcept;
  /// True when the walk with steps k-1, k ~ mu, is not confined to a
  /// strict sublattice of Z.
  bool aperiodic() const noexcept { return aperiodic_; }

  std::uint32_t sample(Stream& rng) const noexcept { return table_.sample(rng); }

 private:
  std::vector<double> pmf_;
  double mean_ = 0.0;
  double rho2_ = 0.0;
  bool aperiodic_ = false;
  AliasTable table_;
};

/// Rooted ordered tree stored by child counts in lexicographic order, with
/// parent and height arrays derived at construction.
class PlaneTree {
 public:
  /// Throws std::invalid_argument unless `child_counts` is a Lukasiewicz word.
  explicit PlaneTree(std::vector<std::uint32_t> child_counts);

  std::size_t size() const noexcept { return child_counts_.size(); }
  std::span<const std::uint32_t> child_counts() const noexcept { return child_counts_; }
  std::span<const std::uint32_t> heights() const noexcept { return height_; }
  std::span<const std::uint32_t> parents() const noexcept { return parent_; }
  /// Parent of vertex i >= 1. The root is its own parent.
  std::uint32_t parent(std::size_t i) const { return parent_.at(i); }
  std::uint32_t height(std::size_t i) const { return height_.at(i); }
  std::uint32_t max_height() const noexcept;

  friend bool operator==(const PlaneTree& a, const PlaneTree& b) { return a.child_counts_ == b.child_counts_; }

 private:
  std::vector<std::uint32_t> child_counts_;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> height_;
};

/// True iff partial sums of (c_i - 1) stay >= 0 before the last index and
/// reach -1 exactly at it.
bool is_lukasiewicz(std::span<const std::uint32_t> child_counts) noexcept;

/// Unconditioned DFS generation stopped after `cap` vertices.
struct CapExceeded {
  std::size_t cap;
};

using GwOutcome = std::variant<PlaneTree, CapExceeded>;

GwOutcome sample_gw_unconditioned(const OffspringDist& mu, std::size_t cap, Stream& rng);

/// Galton-Watson tree conditioned on exactly n vertices. Offspring counts are
/// drawn as a multinomial conditioned (by rejection) on summing to n - 1,
/// shuffled, and rotated to the unique first-passage cyclic shift.
/// Throws UnreachableSize when P(#T = n) = 0.
PlaneTree sample_gw_conditioned(const OffspringDist& mu, std::size_t n, Stream& rng);

/// Whether P(#T = n) > 0, i.e. n - 1 is a sum of positive offspring values.
bool size_reachable(const OffspringDist& mu, std::size_t n);

/// P(#T = n) for n = 1..n_max (entry n-1), as (1/n) mu^{*n}(n-1).
std::vector<double> total_progeny_pmf(const OffspringDist& mu, std::size_t n_max);

/// k^{3/2} P(#T = k) rho sqrt(2 pi); tends to 1. Throws PeriodicOffspring.
double kemperman_ratio(const OffspringDist& mu, std::size_t k);

struct MrcaDistance {
  std::uint32_t mrca_height;
  std::uint32_t distance;
};

MrcaDistance mrca_and_distance(const PlaneTree& tree, std::size_t i, std::size_t j);

/// Number of ordered vertex pairs at graph distance k, for k = 0..k_max.
std::vector<std::uint64_t> distance_profile(const PlaneTree& tree, std::size_t k_max);

}  // namespace treerange
