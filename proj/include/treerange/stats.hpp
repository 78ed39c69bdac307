#pragma once

// Test statistics used by the verification suite.

#include <span>
#include <vector>

namespace treerange {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov with the asymptotic Kolmogorov p-value at
/// sqrt(n m / (n + m)) D.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Goodness of fit of counts against cell probabilities (dof = cells - 1).
ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> probs);

/// |a - b| / sqrt(se_a^2 + se_b^2); 0 when both errors vanish and a == b.
double z_score(double a, double se_a, double b, double se_b);

}  // namespace treerange
