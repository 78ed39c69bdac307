#include "treerange/alias.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace treerange {

AliasTable::AliasTable(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("alias table needs at least one weight");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("alias table weights must have positive sum");

  size_ = static_cast<std::uint32_t>(weights.size());
  cutoff_.assign(size_, 0);
  alias_.resize(size_);
  std::iota(alias_.begin(), alias_.end(), 0U);

  std::vector<double> scaled(size_);
  std::vector<std::uint32_t> small;
  std::vector<std::uint32_t> large;
  for (std::uint32_t i = 0; i < size_; ++i) {
    scaled[i] = weights[i] / total * size_;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    cutoff_[s] = static_cast<std::uint64_t>(std::ldexp(scaled[s], 32));
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (auto i : large) cutoff_[i] = std::uint64_t{1} << 32;
  for (auto i : small) cutoff_[i] = std::uint64_t{1} << 32;
}

}  // namespace treerange
