#pragma once

// Seeded parallel trial execution. Trial i always receives the stream
// trial_stream(seed, experiment, i) and writes result slot i, so the output
// vector is identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

#include "treerange/rng.hpp"

namespace treerange {

struct TrialPlan {
  std::uint64_t seed = 0;
  std::uint64_t experiment = 0;
  std::size_t trials = 1;
  unsigned workers = 1;
};

/// Stable 64-bit tag for an experiment label (FNV-1a).
constexpr std::uint64_t experiment_tag(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Worker count from TREERANGE_WORKERS, else hardware concurrency.
unsigned default_workers();

template <class Fn>
auto run_trials(const TrialPlan& plan, Fn&& fn) {
  using Result = std::invoke_result_t<Fn&, std::size_t, Stream&>;
  std::vector<std::optional<Result>> slots(plan.trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= plan.trials) return;
      try {
        Stream rng = trial_stream(plan.seed, plan.experiment, i);
        slots[i].emplace(fn(i, rng));
      } catch (...) {
        std::lock_guard lock(failure_lock);
        if (!failure) failure = std::current_exception();
        next.store(plan.trials);
        return;
      }
    }
  };

  const unsigned workers = std::max(1U, std::min<unsigned>(plan.workers, static_cast<unsigned>(std::max<std::size_t>(plan.trials, 1))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Result> results;
  results.reserve(plan.trials);
  for (auto& s : slots) results.push_back(std::move(*s));
  return results;
}

}  // namespace treerange
