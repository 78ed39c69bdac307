#include "treerange/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace treerange {

double kolmogorov_survival(double lambda) {
  // Below 0.2 the alternating series is useless and the value is 1 to double precision.
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS needs two nonempty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  KsResult out;
  out.statistic = d;
  out.p_value = kolmogorov_survival(std::sqrt(n * m / (n + m)) * d);
  return out;
}

ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> probs) {
  if (observed.size() != probs.size() || observed.size() < 2) throw std::invalid_argument("chi-square needs matching cells, at least 2");
  double total = 0.0;
  for (double o : observed) total += o;
  ChiSquareResult out;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double e = total * probs[k];
    if (!(e > 0.0)) throw std::invalid_argument("chi-square cell with zero expectation");
    out.statistic += (observed[k] - e) * (observed[k] - e) / e;
  }
  out.dof = static_cast<int>(observed.size()) - 1;
  const boost::math::chi_squared dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

double z_score(double a, double se_a, double b, double se_b) {
  const double s = std::hypot(se_a, se_b);
  if (s == 0.0) return a == b ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(a - b) / s;
}

}  // namespace treerange
