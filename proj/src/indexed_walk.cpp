#include "treerange/indexed_walk.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "treerange/errors.hpp"

namespace treerange {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count();
}

struct HitBatch {
  std::uint64_t hits = 0;
  std::uint64_t capped = 0;
  std::int64_t runtime_ns = 0;
};

template <class TrialFn>
HittingEstimate run_hit_batches(const TrialPlan& plan, TrialFn trial) {
  TrialPlan batches = plan;
  batches.trials = (plan.trials + kHitBatch - 1) / kHitBatch;
  auto results = run_trials(batches, [&](std::size_t b, Stream& rng) {
    const auto start = Clock::now();
    HitBatch out;
    const std::size_t first = b * kHitBatch;
    const std::size_t last = std::min(plan.trials, first + kHitBatch);
    for (std::size_t t = first; t < last; ++t) {
      Stream tree_rng = rng.substream(t - first);
      switch (trial(tree_rng)) {
        case WalkOutcome::Stopped:
          ++out.hits;
          break;
        case WalkOutcome::Capped:
          ++out.capped;
          break;
        case WalkOutcome::Finished:
          break;
      }
    }
    out.runtime_ns = elapsed_ns(start);
    return out;
  });

  HittingEstimate est;
  est.trials = plan.trials;
  for (const auto& r : results) {
    est.hits += r.hits;
    est.capped += r.capped;
    est.batch_hits.push_back(r.hits);
    est.batch_capped.push_back(r.capped);
    est.batch_runtime_ns.push_back(r.runtime_ns);
  }
  const double n = static_cast<double>(est.trials);
  est.p_hat = static_cast<double>(est.hits) / n;
  est.se = std::sqrt(est.p_hat * (1.0 - est.p_hat) / n);
  est.capped_fraction = static_cast<double>(est.capped) / n;
  return est;
}

}  // namespace

SpatialTree assign_locations(const PlaneTree& tree, const JumpDist& theta, Stream& rng) {
  SpatialTree out{tree, theta.dim(), std::vector<Site>(tree.size())};
  const auto parents = tree.parents();
  for (std::size_t v = 1; v < tree.size(); ++v) out.locations[v] = out.locations[parents[v]] + theta.sample(rng);
  return out;
}

std::uint64_t LocalTimeField::at(const Site& s) const {
  const auto it = counts_.find(pack_site(s, d_));
  return it == counts_.end() ? 0 : it->second;
}

LocalTimeField local_time_field(const SpatialTree& spatial) {
  LocalTimeField field(spatial.dim, spatial.locations.size());
  for (const auto& s : spatial.locations) field.add(s);
  return field;
}

Estimate estimate_mean(const std::vector<double>& xs) {
  Estimate e;
  e.trials = xs.size();
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return e;
}

RangeSample scaled_range_sample(const OffspringDist& mu, const JumpDist& theta, std::size_t n, const TrialPlan& plan) {
  if (!size_reachable(mu, n)) throw UnreachableSize("P(#T = " + std::to_string(n) + ") = 0 for this offspring law");
  struct Trial {
    std::uint64_t range;
    std::int64_t runtime_ns;
  };
  const int d = theta.dim();
  auto trials = run_trials(plan, [&](std::size_t, Stream& rng) {
    const auto start = Clock::now();
    const auto spatial = assign_locations(sample_gw_conditioned(mu, n, rng), theta, rng);
    std::vector<std::uint64_t> keys;
    keys.reserve(n);
    for (const auto& s : spatial.locations) keys.push_back(pack_site(s, d));
    std::sort(keys.begin(), keys.end());
    const auto distinct = static_cast<std::uint64_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
    return Trial{distinct, elapsed_ns(start)};
  });

  RangeSample out;
  out.n = n;
  const double scale = std::pow(static_cast<double>(n), -0.25 * d);
  for (const auto& t : trials) {
    out.range.push_back(t.range);
    out.scaled.push_back(static_cast<double>(t.range) * scale);
    out.runtime_ns.push_back(t.runtime_ns);
  }
  return out;
}

LocalTimeMoment local_time_moment(const OffspringDist& mu, const JumpDist& theta, std::size_t n, const Site& x, const Site& y,
                                  const TrialPlan& plan) {
  if (x == Site{} || y == Site{}) throw std::invalid_argument("local-time targets must be nonzero");
  if (!size_reachable(mu, n)) throw UnreachableSize("P(#T = " + std::to_string(n) + ") = 0 for this offspring law");
  struct Trial {
    double product;
    std::int64_t runtime_ns;
  };
  auto trials = run_trials(plan, [&](std::size_t, Stream& rng) {
    const auto start = Clock::now();
    const auto spatial = assign_locations(sample_gw_conditioned(mu, n, rng), theta, rng);
    std::uint64_t lx = 0;
    std::uint64_t ly = 0;
    for (const auto& s : spatial.locations) {
      lx += (s == x);
      ly += (s == y);
    }
    return Trial{static_cast<double>(lx) * static_cast<double>(ly), elapsed_ns(start)};
  });

  LocalTimeMoment out;
  const double scale = std::pow(static_cast<double>(n), 0.5 * theta.dim() - 2.0);
  std::vector<double> scaled;
  for (const auto& t : trials) {
    out.products.push_back(t.product);
    out.runtime_ns.push_back(t.runtime_ns);
    scaled.push_back(t.product * scale);
  }
  out.scaled = estimate_mean(scaled);
  return out;
}

std::size_t default_hitting_cap(const Site& a) {
  const double r2 = a.norm2();
  return static_cast<std::size_t>(std::llround(200.0 * r2 * r2));
}

HittingEstimate estimate_hitting_prob(const OffspringDist& mu, const JumpDist& theta, const Site& a, std::size_t cap,
                                      const TrialPlan& plan) {
  if (a == Site{}) throw std::invalid_argument("hitting target must be nonzero");
  if (cap == 0) throw std::invalid_argument("cap must be at least 1");
  return run_hit_batches(plan, [&](Stream& rng) {
    return explore_gw_walk(mu, theta, cap, rng, [&](const Site& s) { return s == a; });
  });
}

VisitedSet brw_visited(std::size_t p, const OffspringDist& mu, const JumpDist& theta, std::size_t cap_per_tree, const Stream& rng) {
  if (p == 0) throw std::invalid_argument("particle count must be at least 1");
  VisitedSet out;
  out.dim = theta.dim();
  for (std::size_t j = 0; j < p; ++j) {
    Stream tree_rng = rng.substream(j);
    const auto outcome = explore_gw_walk(mu, theta, cap_per_tree, tree_rng, [&](const Site& s) {
      out.sites.insert(pack_site(s, out.dim));
      return false;
    });
    if (outcome == WalkOutcome::Capped) ++out.capped_trees;
  }
  return out;
}

BrwIdentity brw_hit_identity_check(const Site& a, std::size_t p, const OffspringDist& mu, const JumpDist& theta, std::size_t cap,
                                   const TrialPlan& lhs_plan, const TrialPlan& rhs_plan) {
  if (p == 0) throw std::invalid_argument("particle count must be at least 1");
  if (a == Site{}) throw std::invalid_argument("hitting target must be nonzero");
  if (lhs_plan.seed == rhs_plan.seed && lhs_plan.experiment == rhs_plan.experiment) {
    throw std::invalid_argument("the two sides of the identity need independent streams");
  }
  BrwIdentity out;
  out.lhs = run_hit_batches(lhs_plan, [&](Stream& rng) {
    bool capped = false;
    for (std::size_t j = 0; j < p; ++j) {
      Stream tree_rng = rng.substream(j);
      const auto outcome = explore_gw_walk(mu, theta, cap, tree_rng, [&](const Site& s) { return s == a; });
      if (outcome == WalkOutcome::Stopped) return WalkOutcome::Stopped;
      capped = capped || outcome == WalkOutcome::Capped;
    }
    return capped ? WalkOutcome::Capped : WalkOutcome::Finished;
  });
  out.single = estimate_hitting_prob(mu, theta, a, cap, rhs_plan);

  const double q = out.single.p_hat;
  const double pd = static_cast<double>(p);
  out.rhs = 1.0 - std::pow(1.0 - q, pd);
  // Delta method: d/dq [1 - (1-q)^p] = p (1-q)^{p-1}.
  out.rhs_se = pd * std::pow(1.0 - q, pd - 1.0) * out.single.se;
  const double combined = std::hypot(out.lhs.se, out.rhs_se);
  out.z = combined > 0.0 ? (out.lhs.p_hat - out.rhs) / combined : 0.0;
  return out;
}

}  // namespace treerange
