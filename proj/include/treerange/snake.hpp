#pragma once

// Discretized Brownian snake driven by a normalized excursion: excursion
// sampling, head-path evolution and occupation-grid summaries of ISE.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "treerange/rng.hpp"

namespace treerange {

/// e(t_i) at t_i = i/m, i = 0..m, with e(0) = e(1) = 0 and e >= 0.
class ExcursionPath {
 public:
  explicit ExcursionPath(std::vector<double> values);

  std::size_t grid_size() const noexcept { return values_.size() - 1; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_.at(i); }
  double max() const noexcept;
  /// min of e over grid points i..j (either order).
  double grid_min(std::size_t i, std::size_t j) const;

 private:
  std::vector<double> values_;
};

/// Uniform Dyck path of m steps (m even, m >= 2) scaled by 1/sqrt(m). It is
/// the Vervaat rotation, at its first minimum, of a +-1 bridge from 0 to -1
/// with m + 1 steps, with the final down-step dropped.
ExcursionPath sample_excursion(std::size_t m, Stream& rng);

/// Head positions of the snake at the grid times.
class SnakeSample {
 public:
  SnakeSample(ExcursionPath excursion, int d, std::vector<double> heads);

  const ExcursionPath& excursion() const noexcept { return excursion_; }
  int dim() const noexcept { return d_; }
  std::size_t points() const noexcept { return heads_.size() / static_cast<std::size_t>(d_); }
  /// Head at grid time i (d coordinates).
  std::span<const double> head(std::size_t i) const;
  std::span<const double> heads() const noexcept { return heads_; }

 private:
  ExcursionPath excursion_;
  int d_;
  std::vector<double> heads_;  // row-major, (m+1) x d
};

/// Evolves the stopped path along the excursion. Between t_i and t_{i+1} the
/// path is cut back to height min(e_i, e_{i+1}) and regrown with independent
/// Gaussian increments up to e_{i+1}; a cut inside a stored segment is
/// resolved by an exact Brownian-bridge draw.
SnakeSample evolve_head(const ExcursionPath& excursion, int d, Stream& rng);

/// Trapezoid-weighted histogram of head positions on cells of width h.
class OccupationGrid {
 public:
  OccupationGrid(int d, double h) : d_(d), h_(h) {}

  int dim() const noexcept { return d_; }
  double cell_width() const noexcept { return h_; }
  std::size_t occupied_cells() const noexcept { return mass_.size(); }
  /// h^d times the number of occupied cells.
  double volume() const noexcept;
  double total_mass() const noexcept;
  /// Mass of the cell containing y.
  double mass_at(std::span<const double> y) const;
  void add(std::span<const double> y, double weight);
  /// Cells sorted by index; each row is "i_1,...,i_d,mass".
  void write_csv(std::ostream& out) const;
  const std::unordered_map<std::uint64_t, double>& cells() const noexcept { return mass_; }

 private:
  std::uint64_t key(std::span<const double> y) const;

  int d_;
  double h_;
  std::unordered_map<std::uint64_t, double> mass_;
};

OccupationGrid occupation_grid(const SnakeSample& snake, double h);

/// Box-kernel estimate of the occupation density at y.
double density_at(const SnakeSample& snake, std::span<const double> y, double h);

/// Heuristic default bandwidth m^{-1/4}.
double default_bandwidth(std::size_t m);

/// Head path as raw little-endian float32, (m+1) x d.
void write_heads_binary(const SnakeSample& snake, std::ostream& out);

}  // namespace treerange
