#include "treerange/snake.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <utility>

namespace treerange {

namespace {

constexpr int kCellBits = 21;

}  // namespace

ExcursionPath::ExcursionPath(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 3) throw std::invalid_argument("excursion needs at least two steps");
  if (values_.front() != 0.0 || values_.back() != 0.0) throw std::invalid_argument("excursion must start and end at 0");
  if (std::any_of(values_.begin(), values_.end(), [](double v) { return !(v >= 0.0); })) {
    throw std::invalid_argument("excursion must be nonnegative");
  }
  if (!(max() > 0.0)) throw std::invalid_argument("excursion must leave 0");
}

double ExcursionPath::max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }

double ExcursionPath::grid_min(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  if (j >= values_.size()) throw std::out_of_range("grid index out of range");
  return *std::min_element(values_.begin() + static_cast<std::ptrdiff_t>(i), values_.begin() + static_cast<std::ptrdiff_t>(j) + 1);
}

ExcursionPath sample_excursion(std::size_t m, Stream& rng) {
  if (m < 2 || m % 2 != 0) throw std::invalid_argument("excursion grid size must be even and at least 2");
  // Bridge: m/2 up-steps and m/2 + 1 down-steps in uniform random order.
  const std::size_t steps = m + 1;
  std::vector<signed char> step(steps, -1);
  std::fill(step.begin(), step.begin() + static_cast<std::ptrdiff_t>(m / 2), 1);
  for (std::size_t i = steps - 1; i > 0; --i) std::swap(step[i], step[rng.below(i + 1)]);

  std::int64_t walk = 0;
  std::int64_t lowest = 1;
  std::size_t start = 0;
  for (std::size_t j = 1; j <= steps; ++j) {
    walk += step[j - 1];
    if (walk < lowest) {
      lowest = walk;
      start = j % steps;
    }
  }
  std::rotate(step.begin(), step.begin() + static_cast<std::ptrdiff_t>(start), step.end());

  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  std::vector<double> values(m + 1, 0.0);
  std::int64_t level = 0;
  for (std::size_t i = 0; i < m; ++i) {
    level += step[i];
    values[i + 1] = static_cast<double>(level) * scale;
  }
  values[m] = 0.0;
  return ExcursionPath(std::move(values));
}

SnakeSample::SnakeSample(ExcursionPath excursion, int d, std::vector<double> heads)
    : excursion_(std::move(excursion)), d_(d), heads_(std::move(heads)) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (heads_.size() != (excursion_.grid_size() + 1) * static_cast<std::size_t>(d)) {
    throw std::invalid_argument("head array does not match the excursion grid");
  }
}

std::span<const double> SnakeSample::head(std::size_t i) const {
  if (i >= points()) throw std::out_of_range("grid index out of range");
  return std::span<const double>(heads_).subspan(i * static_cast<std::size_t>(d_), static_cast<std::size_t>(d_));
}

SnakeSample evolve_head(const ExcursionPath& excursion, int d, Stream& rng) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  const auto e = excursion.values();
  const std::size_t m = excursion.grid_size();
  const auto du = static_cast<std::size_t>(d);
  std::normal_distribution<double> gauss;

  // The stopped path as a stack of nodes (height, position) joined by
  // Brownian segments.
  std::vector<double> height{0.0};
  std::vector<double> pos(du, 0.0);
  std::vector<double> heads((m + 1) * du, 0.0);
  std::vector<double> cut(du);

  for (std::size_t i = 0; i < m; ++i) {
    const double low = std::min(e[i], e[i + 1]);
    // Truncate to height `low`.
    while (height.size() > 1 && height[height.size() - 2] >= low) {
      height.pop_back();
      pos.resize(pos.size() - du);
    }
    if (height.back() > low) {
      const std::size_t top = height.size() - 1;
      const double h0 = height[top - 1];
      const double h1 = height[top];
      const double frac = (low - h0) / (h1 - h0);
      const double sd = std::sqrt((low - h0) * (h1 - low) / (h1 - h0));
      for (std::size_t k = 0; k < du; ++k) {
        const double p0 = pos[(top - 1) * du + k];
        const double p1 = pos[top * du + k];
        cut[k] = p0 + frac * (p1 - p0) + sd * gauss(rng);
      }
      height.back() = low;
      std::copy(cut.begin(), cut.end(), pos.end() - static_cast<std::ptrdiff_t>(du));
    }
    // Regrow to e_{i+1}.
    const double rise = e[i + 1] - height.back();
    if (rise > 0.0) {
      const double sd = std::sqrt(rise);
      const std::size_t top = height.size() - 1;
      height.push_back(e[i + 1]);
      for (std::size_t k = 0; k < du; ++k) pos.push_back(pos[top * du + k] + sd * gauss(rng));
    }
    std::copy(pos.end() - static_cast<std::ptrdiff_t>(du), pos.end(), heads.begin() + static_cast<std::ptrdiff_t>((i + 1) * du));
  }
  return SnakeSample(excursion, d, std::move(heads));
}

std::uint64_t OccupationGrid::key(std::span<const double> y) const {
  const std::int64_t offset = std::int64_t{1} << (kCellBits - 1);
  std::uint64_t k = 0;
  for (int i = 0; i < d_; ++i) {
    const auto cell = static_cast<std::int64_t>(std::floor(y[static_cast<std::size_t>(i)] / h_)) + offset;
    if (cell < 0 || cell >= 2 * offset) throw std::overflow_error("occupation cell index out of range");
    k |= static_cast<std::uint64_t>(cell) << (kCellBits * i);
  }
  return k;
}

void OccupationGrid::add(std::span<const double> y, double weight) { mass_[key(y)] += weight; }

double OccupationGrid::volume() const noexcept { return std::pow(h_, d_) * static_cast<double>(mass_.size()); }

double OccupationGrid::total_mass() const noexcept {
  // Summed in key order so the value does not depend on hash-table layout.
  std::vector<std::pair<std::uint64_t, double>> cells(mass_.begin(), mass_.end());
  std::sort(cells.begin(), cells.end());
  double total = 0.0;
  for (const auto& c : cells) total += c.second;
  return total;
}

double OccupationGrid::mass_at(std::span<const double> y) const {
  const auto it = mass_.find(key(y));
  return it == mass_.end() ? 0.0 : it->second;
}

void OccupationGrid::write_csv(std::ostream& out) const {
  std::vector<std::pair<std::uint64_t, double>> cells(mass_.begin(), mass_.end());
  std::sort(cells.begin(), cells.end());
  const std::int64_t offset = std::int64_t{1} << (kCellBits - 1);
  const std::uint64_t mask = (std::uint64_t{1} << kCellBits) - 1;
  for (int i = 0; i < d_; ++i) out << "i" << (i + 1) << ',';
  out << "mass\n";
  for (const auto& [k, mass] : cells) {
    for (int i = 0; i < d_; ++i) out << static_cast<std::int64_t>((k >> (kCellBits * i)) & mask) - offset << ',';
    out << mass << '\n';
  }
}

OccupationGrid occupation_grid(const SnakeSample& snake, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("cell width must be positive");
  OccupationGrid grid(snake.dim(), h);
  const std::size_t m = snake.excursion().grid_size();
  const double w = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i <= m; ++i) grid.add(snake.head(i), (i == 0 || i == m) ? 0.5 * w : w);
  return grid;
}

double density_at(const SnakeSample& snake, std::span<const double> y, double h) {
  const auto grid = occupation_grid(snake, h);
  return grid.mass_at(y) / std::pow(h, snake.dim());
}

double default_bandwidth(std::size_t m) { return std::pow(static_cast<double>(m), -0.25); }

void write_heads_binary(const SnakeSample& snake, std::ostream& out) {
  for (double v : snake.heads()) {
    const auto f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof f);
  }
}

}  // namespace treerange
