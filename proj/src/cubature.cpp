#include "treerange/cubature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "treerange/errors.hpp"

namespace treerange {

namespace {

struct Region {
  std::vector<double> center;
  std::vector<double> half;
  double value = 0.0;
  double error = 0.0;
  std::size_t split_axis = 0;

  bool operator<(const Region& o) const noexcept { return error < o.error; }
};

class Rule {
 public:
  explicit Rule(std::size_t n) : n_(n) {
    const double dn = static_cast<double>(n);
    w7_ = {(12824.0 - 9120.0 * dn + 400.0 * dn * dn) / 19683.0, 980.0 / 6561.0, (1820.0 - 400.0 * dn) / 19683.0,
           200.0 / 19683.0, 6859.0 / 19683.0 / std::ldexp(1.0, static_cast<int>(n))};
    w5_ = {(729.0 - 950.0 * dn + 50.0 * dn * dn) / 729.0, 245.0 / 486.0, (265.0 - 100.0 * dn) / 1458.0, 25.0 / 729.0};
  }

  std::size_t points() const noexcept { return 1 + 4 * n_ + 2 * n_ * (n_ - 1) + (std::size_t{1} << n_); }

  void apply(const Integrand& f, Region& r, std::vector<double>& x) const {
    static const double l2 = std::sqrt(9.0 / 70.0);
    static const double l4 = std::sqrt(9.0 / 10.0);
    static const double l5 = std::sqrt(9.0 / 19.0);
    constexpr double ratio = (9.0 / 70.0) / (9.0 / 10.0);

    x = r.center;
    const double f0 = f(x);
    double s2 = 0.0;
    double s3 = 0.0;
    double best_diff = -1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      x[i] = r.center[i] - l2 * r.half[i];
      const double a = f(x);
      x[i] = r.center[i] + l2 * r.half[i];
      const double b = f(x);
      x[i] = r.center[i] - l4 * r.half[i];
      const double c = f(x);
      x[i] = r.center[i] + l4 * r.half[i];
      const double d = f(x);
      x[i] = r.center[i];
      s2 += a + b;
      s3 += c + d;
      const double diff = std::abs(a + b - 2.0 * f0 - ratio * (c + d - 2.0 * f0));
      if (diff > best_diff) {
        best_diff = diff;
        r.split_axis = i;
      }
    }
    double s4 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        for (int si : {-1, 1}) {
          for (int sj : {-1, 1}) {
            x[i] = r.center[i] + si * l4 * r.half[i];
            x[j] = r.center[j] + sj * l4 * r.half[j];
            s4 += f(x);
          }
        }
        x[i] = r.center[i];
        x[j] = r.center[j];
      }
    }
    double s5 = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n_); ++mask) {
      for (std::size_t i = 0; i < n_; ++i) x[i] = r.center[i] + (((mask >> i) & 1U) ? l5 : -l5) * r.half[i];
      s5 += f(x);
    }

    double vol = 1.0;
    for (double h : r.half) vol *= 2.0 * h;
    const double i7 = vol * (w7_[0] * f0 + w7_[1] * s2 + w7_[2] * s3 + w7_[3] * s4 + w7_[4] * s5);
    const double i5 = vol * (w5_[0] * f0 + w5_[1] * s2 + w5_[2] * s3 + w5_[3] * s4);
    r.value = i7;
    r.error = std::abs(i7 - i5);
  }

 private:
  std::size_t n_;
  std::vector<double> w7_;
  std::vector<double> w5_;
};

}  // namespace

CubatureResult genz_malik(const Integrand& f, std::span<const double> lower, std::span<const double> upper,
                          const CubatureOptions& opts) {
  const std::size_t n = lower.size();
  if (n < 2 || n > 15 || upper.size() != n) throw std::invalid_argument("cubature needs matching bounds of dimension 2..15");
  const Rule rule(n);
  std::vector<double> x(n);

  Region root;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(upper[i] > lower[i])) throw std::invalid_argument("empty integration box");
    root.center.push_back(0.5 * (lower[i] + upper[i]));
    root.half.push_back(0.5 * (upper[i] - lower[i]));
  }
  rule.apply(f, root, x);

  CubatureResult out;
  out.evals = rule.points();
  double value = root.value;
  double error = root.error;
  std::priority_queue<Region> heap;
  heap.push(std::move(root));

  while (error > std::max(opts.abs_tol, opts.rel_tol * std::abs(value))) {
    if (out.evals + 2 * rule.points() > opts.max_evals) {
      throw QuadratureNotConverged(value, error);
    }
    Region parent = heap.top();
    heap.pop();
    value -= parent.value;
    error -= parent.error;
    const std::size_t axis = parent.split_axis;
    Region lo = parent;
    Region hi = std::move(parent);
    lo.half[axis] *= 0.5;
    hi.half[axis] = lo.half[axis];
    lo.center[axis] -= lo.half[axis];
    hi.center[axis] += hi.half[axis];
    rule.apply(f, lo, x);
    rule.apply(f, hi, x);
    out.evals += 2 * rule.points();
    value += lo.value + hi.value;
    error += lo.error + hi.error;
    heap.push(std::move(lo));
    heap.push(std::move(hi));
  }

  // Re-sum from the regions to shed the drift of the running totals.
  out.regions = heap.size();
  out.value = 0.0;
  out.error = 0.0;
  while (!heap.empty()) {
    out.value += heap.top().value;
    out.error += heap.top().error;
    heap.pop();
  }
  return out;
}

}  // namespace treerange
