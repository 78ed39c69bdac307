#pragma once

// Globally adaptive cubature over boxes with the Genz-Malik degree 7/5
// embedded rule pair.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace treerange {

struct CubatureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evals = 0;
  std::size_t regions = 0;
};

struct CubatureOptions {
  double rel_tol = 1e-6;
  double abs_tol = 0.0;
  std::size_t max_evals = 20'000'000;
};

using Integrand = std::function<double(std::span<const double>)>;

/// Integrates f over the box [lower, upper] (dimension 2..15). Throws
/// QuadratureNotConverged when max_evals is reached first.
CubatureResult genz_malik(const Integrand& f, std::span<const double> lower, std::span<const double> upper,
                          const CubatureOptions& opts = {});

}  // namespace treerange
