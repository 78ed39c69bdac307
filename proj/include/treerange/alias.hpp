#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "treerange/rng.hpp"

namespace treerange {

/// Walker/Vose alias table over indices 0..k-1. One 64-bit draw per sample:
/// the high word picks the column, the low word decides against the cutoff.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::uint32_t sample(Stream& rng) const noexcept {
    const std::uint64_t bits = rng();
    const auto column = static_cast<std::uint32_t>((static_cast<std::uint64_t>(bits >> 32) * size_) >> 32);
    return (bits & 0xFFFFFFFFULL) < cutoff_[column] ? column : alias_[column];
  }

  std::size_t size() const noexcept { return size_; }

 private:
  std::uint32_t size_ = 0;
  std::vector<std::uint64_t> cutoff_;  // acceptance threshold scaled to 2^32
  std::vector<std::uint32_t> alias_;
};

}  // namespace treerange
