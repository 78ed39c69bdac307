#pragma once

// Random walks indexed by Galton-Watson trees: spatial locations, local times
// and range, distant-point hitting, and branching random walks from p
// ancestors.

#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "treerange/gw_trees.hpp"
#include "treerange/lattice.hpp"
#include "treerange/parallel.hpp"
#include "treerange/rng.hpp"

namespace treerange {

struct SpatialTree {
  PlaneTree tree;
  int dim;
  std::vector<Site> locations;  // lexicographic vertex order, root at 0
};

/// Root at the origin, independent theta increments along edges.
SpatialTree assign_locations(const PlaneTree& tree, const JumpDist& theta, Stream& rng);

/// Visit counts per lattice site.
class LocalTimeField {
 public:
  LocalTimeField(int d, std::size_t n) : d_(d), n_(n) {}

  void add(const Site& s) { ++counts_[pack_site(s, d_)]; }
  std::uint64_t at(const Site& s) const;
  std::size_t range() const noexcept { return counts_.size(); }
  std::size_t vertices() const noexcept { return n_; }
  int dim() const noexcept { return d_; }
  const std::unordered_map<std::uint64_t, std::uint64_t>& counts() const noexcept { return counts_; }

 private:
  int d_;
  std::size_t n_;
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
};

LocalTimeField local_time_field(const SpatialTree& spatial);

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t trials = 0;
};

/// Mean and standard error of the mean.
Estimate estimate_mean(const std::vector<double>& xs);

struct RangeSample {
  std::size_t n = 0;
  std::vector<std::uint64_t> range;    // R_n per trial
  std::vector<double> scaled;          // n^{-d/4} R_n per trial
  std::vector<std::int64_t> runtime_ns;
};

/// plan.trials conditioned trees of size n, one range value each.
RangeSample scaled_range_sample(const OffspringDist& mu, const JumpDist& theta, std::size_t n, const TrialPlan& plan);

struct LocalTimeMoment {
  Estimate scaled;                  // n^{d/2-2} E[L_n(x) L_n(y)]
  std::vector<double> products;     // L_n(x) L_n(y) per trial
  std::vector<std::int64_t> runtime_ns;
};

/// Throws std::invalid_argument for a zero target.
LocalTimeMoment local_time_moment(const OffspringDist& mu, const JumpDist& theta, std::size_t n, const Site& x, const Site& y,
                                  const TrialPlan& plan);

enum class WalkOutcome { Finished, Stopped, Capped };

/// Generates an unconditioned tree-indexed walk vertex by vertex in
/// lexicographic order without storing the tree. `visit(site)` returns true
/// to stop early. Capped when more than `cap` vertices would be generated.
template <class Visit>
WalkOutcome explore_gw_walk(const OffspringDist& mu, const JumpDist& theta, std::size_t cap, Stream& rng, Visit&& visit) {
  struct Frame {
    Site site;
    std::uint32_t remaining;
  };
  thread_local std::vector<Frame> stack;
  stack.clear();
  const Site root{};
  if (visit(root)) return WalkOutcome::Stopped;
  std::size_t generated = 1;
  if (const auto k = mu.sample(rng); k > 0) stack.push_back({root, k});
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.remaining == 0) {
      stack.pop_back();
      continue;
    }
    --top.remaining;
    if (generated == cap) return WalkOutcome::Capped;
    ++generated;
    const Site child = top.site + theta.sample(rng);
    if (visit(child)) return WalkOutcome::Stopped;
    if (const auto k = mu.sample(rng); k > 0) stack.push_back({child, k});
  }
  return WalkOutcome::Finished;
}

struct HittingEstimate {
  double p_hat = 0.0;
  double se = 0.0;
  /// Trees that reached the cap without visiting a, as a fraction of trials.
  double capped_fraction = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t capped = 0;
  std::uint64_t trials = 0;
  /// Per-batch hit and cap counts, in batch order.
  std::vector<std::uint64_t> batch_hits;
  std::vector<std::uint64_t> batch_capped;
  std::vector<std::int64_t> batch_runtime_ns;
};

inline constexpr std::size_t kHitBatch = 1024;

/// Fraction of unconditioned spatial trees that visit a before the cap.
/// plan.trials counts trees; they run in batches of kHitBatch.
HittingEstimate estimate_hitting_prob(const OffspringDist& mu, const JumpDist& theta, const Site& a, std::size_t cap,
                                      const TrialPlan& plan);

/// Default cap 200 |a|^4.
std::size_t default_hitting_cap(const Site& a);

struct VisitedSet {
  int dim = 0;
  std::unordered_set<std::uint64_t> sites;
  std::size_t capped_trees = 0;
  bool contains(const Site& s) const { return sites.count(pack_site(s, dim)) != 0; }
  std::size_t size() const noexcept { return sites.size(); }
};

/// Union of visited sites of p independent trees; tree j uses rng.substream(j).
VisitedSet brw_visited(std::size_t p, const OffspringDist& mu, const JumpDist& theta, std::size_t cap_per_tree, const Stream& rng);

struct BrwIdentity {
  HittingEstimate lhs;     // P(a in V^[p]) directly
  HittingEstimate single;  // P(a in R) for one tree
  double rhs = 0.0;        // 1 - (1 - p_single)^p
  double rhs_se = 0.0;
  double z = 0.0;
};

/// Both sides on independent streams: lhs_plan and rhs_plan must differ in experiment tag.
BrwIdentity brw_hit_identity_check(const Site& a, std::size_t p, const OffspringDist& mu, const JumpDist& theta, std::size_t cap,
                                   const TrialPlan& lhs_plan, const TrialPlan& rhs_plan);

}  // namespace treerange
