#include "treerange/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "treerange/errors.hpp"

namespace treerange {

namespace {

constexpr double kTolerance = 1e-12;

int bits_per_coordinate(int d) { return d <= 3 ? 21 : 16; }

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("dimension must be in 1.." + std::to_string(kMaxDim));
}

}  // namespace

std::uint64_t pack_site(const Site& s, int d) {
  const int bits = bits_per_coordinate(d);
  const std::int64_t offset = std::int64_t{1} << (bits - 1);
  std::uint64_t key = 0;
  for (int i = 0; i < d; ++i) {
    const std::int64_t shifted = static_cast<std::int64_t>(s.x[i]) + offset;
    if (shifted < 0 || shifted >= 2 * offset) throw std::overflow_error("lattice coordinate does not fit the packed key");
    key |= static_cast<std::uint64_t>(shifted) << (bits * i);
  }
  return key;
}

Site unpack_site(std::uint64_t key, int d) {
  const int bits = bits_per_coordinate(d);
  const std::int64_t offset = std::int64_t{1} << (bits - 1);
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  Site s;
  for (int i = 0; i < d; ++i) s.x[i] = static_cast<std::int32_t>(static_cast<std::int64_t>((key >> (bits * i)) & mask) - offset);
  return s;
}

bool generates_lattice(std::span<const Site> vectors, int d) {
  std::vector<std::array<std::int64_t, kMaxDim>> rows;
  for (const auto& v : vectors) {
    std::array<std::int64_t, kMaxDim> r{};
    for (int i = 0; i < d; ++i) r[i] = v.x[i];
    rows.push_back(r);
  }
  std::size_t pivot = 0;
  for (int col = 0; col < d; ++col) {
    // Euclid on column `col` among rows pivot.. until one nonzero entry remains.
    for (;;) {
      std::size_t best = rows.size();
      for (std::size_t r = pivot; r < rows.size(); ++r) {
        if (rows[r][col] != 0 && (best == rows.size() || std::abs(rows[r][col]) < std::abs(rows[best][col]))) best = r;
      }
      if (best == rows.size()) return false;  // rank deficient
      std::swap(rows[pivot], rows[best]);
      bool reduced = true;
      for (std::size_t r = pivot + 1; r < rows.size(); ++r) {
        if (rows[r][col] == 0) continue;
        const std::int64_t q = rows[r][col] / rows[pivot][col];
        for (int i = 0; i < d; ++i) rows[r][i] -= q * rows[pivot][i];
        if (rows[r][col] != 0) reduced = false;
      }
      if (reduced) break;
    }
    if (std::abs(rows[pivot][col]) != 1) return false;
    ++pivot;
  }
  return true;
}

JumpDist::JumpDist(int d, std::vector<Atom> atoms) : d_(d), atoms_(std::move(atoms)) {
  check_dim(d);
  if (atoms_.empty()) throw InvalidDistribution("jump law has empty support");
  double total = 0.0;
  std::array<double, kMaxDim> mean{};
  for (const auto& a : atoms_) {
    if (!(a.prob > 0.0) || !std::isfinite(a.prob)) throw InvalidDistribution("jump probabilities must be positive");
    for (int i = d; i < kMaxDim; ++i) {
      if (a.site.x[i] != 0) throw InvalidDistribution("jump atom has coordinates beyond the dimension");
    }
    total += a.prob;
    for (int i = 0; i < d; ++i) mean[i] += a.prob * a.site.x[i];
  }
  if (std::abs(total - 1.0) > kTolerance) throw InvalidDistribution("jump probabilities sum to " + std::to_string(total));
  for (int i = 0; i < d; ++i) {
    if (std::abs(mean[i]) > kTolerance) throw InvalidDistribution("jump law is not centered");
  }

  cov_ = Eigen::MatrixXd::Zero(d, d);
  for (const auto& a : atoms_) {
    for (int i = 0; i < d; ++i) {
      radius_ = std::max(radius_, std::abs(a.site.x[i]));
      for (int j = 0; j < d; ++j) cov_(i, j) += a.prob * a.site.x[i] * a.site.x[j];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
  if (!(eig.eigenvalues().minCoeff() > kTolerance)) throw InvalidDistribution("jump covariance is not positive definite");
  sigma_ = std::pow(cov_.determinant(), 1.0 / (2.0 * d));

  std::vector<Site> support;
  for (const auto& a : atoms_) support.push_back(a.site);
  if (!generates_lattice(support, d)) throw InvalidDistribution("jump support lies in a strict subgroup of Z^d");

  if (d <= 3) {
    aperiodic_ = return_time_gcd(*this) == 1;
  } else {
    // Equivalent criterion, cheaper in high dimension: the differences of
    // support points must also generate Z^d.
    std::vector<Site> diffs;
    for (const auto& s : support) diffs.push_back(s - support.front());
    aperiodic_ = generates_lattice(diffs, d);
  }

  std::vector<double> probs;
  for (const auto& a : atoms_) probs.push_back(a.prob);
  table_ = AliasTable(probs);
}

JumpDist JumpDist::lazy_simple(int d, double hold) {
  check_dim(d);
  if (!(hold > 0.0 && hold < 1.0)) throw InvalidDistribution("holding probability must lie in (0, 1)");
  std::vector<Atom> atoms{{Site{}, hold}};
  for (int i = 0; i < d; ++i) {
    for (int sign : {1, -1}) {
      Site s;
      s.x[i] = sign;
      atoms.push_back({s, 0.5 * (1.0 - hold) / d});
    }
  }
  return JumpDist(d, std::move(atoms));
}

JumpDist JumpDist::lazy_product(int d) {
  check_dim(d);
  const std::array<double, 3> one{0.25, 0.5, 0.25};
  std::vector<Atom> atoms;
  const int count = static_cast<int>(std::pow(3, d));
  for (int code = 0; code < count; ++code) {
    Site s;
    double p = 1.0;
    int c = code;
    for (int i = 0; i < d; ++i, c /= 3) {
      s.x[i] = c % 3 - 1;
      p *= one[c % 3];
    }
    atoms.push_back({s, p});
  }
  return JumpDist(d, std::move(atoms));
}

JumpDist JumpDist::box_minus_center(int d, int r) {
  check_dim(d);
  if (r < 1) throw std::invalid_argument("box radius must be at least 1");
  const int side = 2 * r + 1;
  const int count = static_cast<int>(std::pow(side, d));
  std::vector<Atom> atoms;
  for (int code = 0; code < count; ++code) {
    Site s;
    int c = code;
    bool origin = true;
    for (int i = 0; i < d; ++i, c /= side) {
      s.x[i] = c % side - r;
      origin = origin && s.x[i] == 0;
    }
    if (!origin) atoms.push_back({s, 1.0 / (count - 1)});
  }
  return JumpDist(d, std::move(atoms));
}

JumpDist JumpDist::parse(std::istream& in) {
  std::vector<Atom> atoms;
  int d = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    const int width = static_cast<int>(tokens.size()) - 1;
    if (d == 0) d = width;
    if (width != d || d < 1 || d > kMaxDim) {
      throw InvalidDistribution("pmf line " + std::to_string(lineno) + ": expected " + std::to_string(d) + " coordinates and a probability");
    }
    Atom a;
    try {
      for (int i = 0; i < d; ++i) a.site.x[i] = std::stoi(tokens[i]);
      a.prob = std::stod(tokens.back());
    } catch (const std::exception&) {
      throw InvalidDistribution("pmf line " + std::to_string(lineno) + ": malformed number");
    }
    atoms.push_back(a);
  }
  if (atoms.empty()) throw InvalidDistribution("pmf file has no atoms");
  return JumpDist(d, std::move(atoms));
}

void JumpDist::write(std::ostream& out) const {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (const auto& a : atoms_) {
    for (int i = 0; i < d_; ++i) out << a.site.x[i] << ' ';
    out << a.prob << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

bool JumpDist::isotropic(double tol) const {
  const double s = cov_(0, 0);
  return (cov_ - s * Eigen::MatrixXd::Identity(d_, d_)).cwiseAbs().maxCoeff() <= tol;
}

bool JumpDist::symmetric() const {
  for (const auto& a : atoms_) {
    Site neg;
    for (int i = 0; i < d_; ++i) neg.x[i] = -a.site.x[i];
    const auto it = std::find_if(atoms_.begin(), atoms_.end(), [&](const Atom& b) { return b.site == neg; });
    if (it == atoms_.end() || std::abs(it->prob - a.prob) > kTolerance) return false;
  }
  return true;
}

std::uint64_t return_time_gcd(const JumpDist& theta, int k_max) {
  // A path that returns to 0 within k_max steps never leaves |x|_inf <= k_max/2 * radius.
  const int half = std::max(1, (k_max / 2 + 1) * theta.radius());
  LatticeField field(theta.dim(), half);
  field[Site{}] = 1.0;
  std::uint64_t g = 0;
  LatticeField next(theta.dim(), half);
  for (int k = 1; k <= k_max; ++k) {
    std::fill(next.values().begin(), next.values().end(), 0.0);
    for (std::size_t i = 0; i < field.cells(); ++i) {
      const double v = field.values()[i];
      if (v == 0.0) continue;
      const Site from = field.site(i);
      for (const auto& a : theta.atoms()) {
        const Site to = from + a.site;
        if (next.contains(to)) next[to] = 1.0;  // positivity only
      }
    }
    std::swap(field, next);
    if (field.at(Site{}) > 0.0) g = std::gcd(g, static_cast<std::uint64_t>(k));
    if (g == 1) break;
  }
  return g;
}

LatticeField::LatticeField(int d, int half_width) : d_(d), half_width_(half_width) {
  check_dim(d);
  if (half_width < 0) throw std::invalid_argument("box half-width must be nonnegative");
  side_ = static_cast<std::size_t>(2 * half_width + 1);
  std::size_t cells = 1;
  for (int i = 0; i < d; ++i) {
    if (cells > std::numeric_limits<std::size_t>::max() / side_) throw std::length_error("lattice box too large");
    cells *= side_;
  }
  values_.assign(cells, 0.0);
}

bool LatticeField::contains(const Site& s) const noexcept {
  for (int i = 0; i < d_; ++i) {
    if (s.x[i] < -half_width_ || s.x[i] > half_width_) return false;
  }
  return true;
}

std::size_t LatticeField::index(const Site& s) const noexcept {
  std::size_t idx = 0;
  for (int i = d_ - 1; i >= 0; --i) idx = idx * side_ + static_cast<std::size_t>(s.x[i] + half_width_);
  return idx;
}

Site LatticeField::site(std::size_t index) const noexcept {
  Site s;
  for (int i = 0; i < d_; ++i) {
    s.x[i] = static_cast<std::int32_t>(index % side_) - half_width_;
    index /= side_;
  }
  return s;
}

double LatticeField::at(const Site& s) const noexcept { return contains(s) ? values_[index(s)] : 0.0; }

double& LatticeField::operator[](const Site& s) {
  if (!contains(s)) throw std::out_of_range("site outside the lattice box");
  return values_[index(s)];
}

double LatticeField::total() const noexcept { return std::accumulate(values_.begin(), values_.end(), 0.0); }

LatticeField conv_power(const JumpDist& theta, int k, int half_width) {
  if (k < 0) throw std::invalid_argument("convolution power must be nonnegative");
  const int d = theta.dim();
  LatticeField field(d, half_width);
  field[Site{}] = 1.0;
  LatticeField next(d, half_width);
  for (int step = 0; step < k; ++step) {
    std::fill(next.values().begin(), next.values().end(), 0.0);
    next.escaped_mass = field.escaped_mass;
    // Only |x|_inf <= step * radius can carry mass.
    const int reach = std::min(half_width, step * theta.radius());
    const std::size_t side = static_cast<std::size_t>(2 * reach + 1);
    std::size_t cube = 1;
    for (int i = 0; i < d; ++i) cube *= side;
    for (std::size_t c = 0; c < cube; ++c) {
      Site from;
      std::size_t rest = c;
      for (int i = 0; i < d; ++i) {
        from.x[i] = static_cast<std::int32_t>(rest % side) - reach;
        rest /= side;
      }
      const double v = field.values()[field.index(from)];
      if (v == 0.0) continue;
      for (const auto& a : theta.atoms()) {
        const Site to = from + a.site;
        if (next.contains(to)) {
          next.values()[next.index(to)] += v * a.prob;
        } else {
          next.escaped_mass += v * a.prob;
        }
      }
    }
    std::swap(field, next);
  }
  return field;
}

GaussianKernel::GaussianKernel(const Eigen::MatrixXd& m) : precision_(m.inverse()) {
  const int d = static_cast<int>(m.rows());
  norm_ = std::pow(2.0 * M_PI, -0.5 * d) / std::sqrt(m.determinant());
}

double GaussianKernel::quadratic(std::span<const double> x) const noexcept {
  const int d = dim();
  double q = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) q += x[i] * precision_(i, j) * x[j];
  }
  return q;
}

double GaussianKernel::operator()(double t, std::span<const double> x) const noexcept {
  const int d = dim();
  return norm_ * std::pow(t, -0.5 * d) * std::exp(-quadratic(x) / (2.0 * t));
}

double GaussianKernel::operator()(double t, const Site& a) const noexcept {
  std::array<double, kMaxDim> x{};
  for (int i = 0; i < dim(); ++i) x[i] = a.x[i];
  return (*this)(t, std::span<const double>(x.data(), static_cast<std::size_t>(dim())));
}

double llt_deviation(const JumpDist& theta, int n, int half_width) {
  if (!theta.aperiodic()) throw PeriodicJump("local limit comparison needs an aperiodic jump law");
  if (n < 1) throw std::invalid_argument("n must be positive");
  if (half_width < 0) half_width = n * theta.radius();
  const auto field = conv_power(theta, n, half_width);
  const GaussianKernel kernel(theta.covariance());
  const double nd = static_cast<double>(n);
  const double scale = std::pow(nd, 0.5 * theta.dim());
  double sup = 0.0;
  for (std::size_t i = 0; i < field.cells(); ++i) {
    const Site a = field.site(i);
    const double weight = (1.0 + a.norm2() / nd) * scale;
    sup = std::max(sup, weight * std::abs(field.values()[i] - kernel(nd, a)));
  }
  return sup;
}

}  // namespace treerange
