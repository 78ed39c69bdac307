#pragma once

// Jump laws on Z^d, exact convolution powers, the Gaussian comparison kernel
// and the local-limit deviation sup_a (1 + |a|^2/n) n^{d/2} |pi_n(a) - p_n(a)|.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "treerange/alias.hpp"
#include "treerange/rng.hpp"

namespace treerange {

inline constexpr int kMaxDim = 4;

/// Lattice point; coordinates beyond the working dimension are zero.
struct Site {
  std::array<std::int32_t, kMaxDim> x{};

  Site& operator+=(const Site& o) noexcept {
    for (int i = 0; i < kMaxDim; ++i) x[i] += o.x[i];
    return *this;
  }
  friend Site operator+(Site a, const Site& b) noexcept { return a += b; }
  friend Site operator-(Site a, const Site& b) noexcept {
    for (int i = 0; i < kMaxDim; ++i) a.x[i] -= b.x[i];
    return a;
  }
  friend bool operator==(const Site&, const Site&) = default;

  double norm2() const noexcept {
    double s = 0;
    for (auto c : x) s += static_cast<double>(c) * c;
    return s;
  }
};

/// Packs a site into 64 bits (21 bits per coordinate for d <= 3, 16 for d = 4).
/// Throws std::overflow_error when a coordinate does not fit.
std::uint64_t pack_site(const Site& s, int d);
Site unpack_site(std::uint64_t key, int d);

/// Finitely supported, centered jump law whose support generates Z^d.
class JumpDist {
 public:
  struct Atom {
    Site site;
    double prob;
  };

  /// Validates: probabilities sum to 1 and mean is 0 (both 1e-12), covariance
  /// positive definite, support generating Z^d.
  JumpDist(int d, std::vector<Atom> atoms);

  /// Stay put with probability `hold`, else move to a uniform one of the 2d neighbours.
  static JumpDist lazy_simple(int d, double hold = 0.5);
  /// Product of d independent one-dimensional laws {1/4, 1/2, 1/4}.
  static JumpDist lazy_product(int d);
  /// Uniform on {-r..r}^d without the origin.
  static JumpDist box_minus_center(int d, int r = 1);

  /// Plain-text pmf: one atom per line, "x_1 ... x_d prob"; '#' starts a comment.
  static JumpDist parse(std::istream& in);
  void write(std::ostream& out) const;

  int dim() const noexcept { return d_; }
  std::span<const Atom> atoms() const noexcept { return atoms_; }
  const Eigen::MatrixXd& covariance() const noexcept { return cov_; }
  /// (det M)^{1/(2d)}.
  double sigma() const noexcept { return sigma_; }
  bool aperiodic() const noexcept { return aperiodic_; }
  bool isotropic(double tol = 1e-12) const;
  bool symmetric() const;
  /// Largest |coordinate| over the support.
  int radius() const noexcept { return radius_; }

  Site sample(Stream& rng) const noexcept { return atoms_[table_.sample(rng)].site; }

 private:
  int d_;
  std::vector<Atom> atoms_;
  Eigen::MatrixXd cov_;
  double sigma_ = 0.0;
  bool aperiodic_ = false;
  int radius_ = 0;
  AliasTable table_;
};

/// True when the integer vectors generate Z^d as a group (echelon reduction).
bool generates_lattice(std::span<const Site> vectors, int d);

/// gcd of {k <= k_max : pi_k(0) > 0}; 0 if none.
std::uint64_t return_time_gcd(const JumpDist& theta, int k_max = 50);

/// Dense array over the box [-half_width, half_width]^d.
class LatticeField {
 public:
  LatticeField(int d, int half_width);

  int dim() const noexcept { return d_; }
  int half_width() const noexcept { return half_width_; }
  std::size_t cells() const noexcept { return values_.size(); }
  bool contains(const Site& s) const noexcept;
  /// Value at s, 0 outside the box.
  double at(const Site& s) const noexcept;
  double& operator[](const Site& s);
  std::size_t index(const Site& s) const noexcept;
  Site site(std::size_t index) const noexcept;
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double total() const noexcept;

  /// Mass that left the box during construction.
  double escaped_mass = 0.0;

 private:
  int d_;
  int half_width_;
  std::size_t side_;
  std::vector<double> values_;
};

/// pi_k = theta^{*k} restricted to the box; mass pushed outside is reported
/// in escaped_mass. A box of half-width k * radius() is exact.
LatticeField conv_power(const JumpDist& theta, int k, int half_width);

/// Centered Gaussian density p_t(x) with covariance t M.
class GaussianKernel {
 public:
  explicit GaussianKernel(const Eigen::MatrixXd& m);

  int dim() const noexcept { return static_cast<int>(precision_.rows()); }
  double operator()(double t, std::span<const double> x) const noexcept;
  double operator()(double t, const Site& a) const noexcept;
  /// x . M^{-1} x
  double quadratic(std::span<const double> x) const noexcept;

 private:
  Eigen::MatrixXd precision_;
  double norm_;  // (2 pi)^{-d/2} det(M)^{-1/2}
};

/// sup over the exact box of (1 + |a|^2/n) n^{d/2} |pi_n(a) - p_n(a)|.
/// Throws PeriodicJump for periodic laws. half_width < 0 means exact (n * radius).
double llt_deviation(const JumpDist& theta, int n, int half_width = -1);

}  // namespace treerange
