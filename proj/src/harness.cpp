#include "treerange/harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "treerange/errors.hpp"
#include "treerange/indexed_walk.hpp"
#include "treerange/limits.hpp"
#include "treerange/parallel.hpp"
#include "treerange/snake.hpp"
#include "treerange/stats.hpp"

namespace treerange {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count();
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return parts;
    start = pos + 1;
  }
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) throw ConfigError("bad value for '" + key + "': '" + text + "'");
  return value;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_number<T>(key, part));
  return out;
}

Site to_site(const std::vector<std::int32_t>& v) {
  Site s;
  for (std::size_t i = 0; i < v.size() && i < static_cast<std::size_t>(kMaxDim); ++i) s.x[i] = v[i];
  return s;
}

std::string site_text(const Site& s, int d) {
  std::string out;
  for (int i = 0; i < d; ++i) {
    if (i) out += ',';
    out += std::to_string(s.x[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// |M^{-1/2} a|^2.
double mahalanobis2(const JumpDist& theta, const Site& a) {
  const int d = theta.dim();
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = a.x[static_cast<std::size_t>(i)];
  return v.dot(theta.covariance().ldlt().solve(v));
}

/// Shared state of one harness run.
class Session {
 public:
  Session(const ExperimentConfig& cfg, Report& report) : cfg_(cfg), report_(report) {}

  std::size_t count(double base) const {
    return static_cast<std::size_t>(std::max<long long>(1, std::llround(base * cfg_.scale)));
  }

  TrialPlan plan(std::string_view label, std::size_t trials) const {
    return TrialPlan{*cfg_.seed, experiment_tag(label), trials, cfg_.workers};
  }

  void record(std::string experiment, std::uint64_t trial, std::string param, std::string quantity, double value,
              double weight = 1.0) {
    report_.records.push_back({std::move(experiment), trial, std::move(param), std::move(quantity), value, weight});
  }

  void timing(std::string experiment, std::uint64_t trial, std::string param, std::int64_t ns) {
    report_.timings.push_back({std::move(experiment), trial, std::move(param), ns});
  }

  void check(Check c) {
    c.pass = compare(c.statistic, c.comparator, c.threshold);
    report_.checks.push_back(std::move(c));
  }

  /// Runs one experiment; an exception becomes a failed check instead of
  /// aborting the remaining experiments.
  void guarded(const std::string& id, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      Check c;
      c.id = id + ".error";
      c.estimate = std::numeric_limits<double>::quiet_NaN();
      c.statistic = 1.0;
      c.threshold = 0.0;
      c.comparator = "<=";
      c.note = e.what();
      check(std::move(c));
    }
  }

  const ExperimentConfig& cfg() const noexcept { return cfg_; }
  const Tolerances& tol() const noexcept { return cfg_.tol; }

 private:
  const ExperimentConfig& cfg_;
  Report& report_;
};

// ---- building blocks shared by the subcommands and the suite ----

std::vector<double> range_block(Session& s, const std::string& label, const OffspringDist& mu, const JumpDist& theta,
                                std::size_t n, std::size_t trials) {
  const auto sample = scaled_range_sample(mu, theta, n, s.plan(label, trials));
  const std::string param = "d=" + std::to_string(theta.dim()) + ";n=" + std::to_string(n);
  for (std::size_t i = 0; i < sample.range.size(); ++i) {
    s.record(label, i, param, "range", static_cast<double>(sample.range[i]));
    s.timing(label, i, param, sample.runtime_ns[i]);
  }
  return sample.scaled;
}

void ks_check(Session& s, const std::string& id, std::span<const double> a, std::span<const double> b, bool gating,
              std::string note = {}) {
  const auto ks = ks_two_sample(a, b);
  Check c;
  c.id = id;
  c.estimate = ks.statistic;
  c.statistic = ks.p_value;
  c.threshold = s.tol().alpha;
  c.comparator = gating ? ">=" : "report";
  c.gating = gating;
  c.note = std::move(note);
  s.check(std::move(c));
}

void localtime_block(Session& s, const std::string& label, const OffspringDist& mu, const JumpDist& theta, std::size_t n,
                     const Site& x, const Site& y, std::size_t trials) {
  const int d = theta.dim();
  const auto start = Clock::now();
  const auto moment = local_time_moment(mu, theta, n, x, y, s.plan(label, trials));
  const std::string param = "d=" + std::to_string(d) + ";n=" + std::to_string(n) + ";x=" + site_text(x, d) + ";y=" + site_text(y, d);
  for (std::size_t i = 0; i < moment.products.size(); ++i) {
    s.record(label, i, param, "product", moment.products[i]);
    s.timing(label, i, param, moment.runtime_ns[i]);
  }

  // phi at the rescaled targets n^{-1/4} x_n, n^{-1/4} y_n.
  const LimitContext ctx(mu, theta);
  const double q = std::pow(static_cast<double>(n), -0.25);
  std::vector<double> xs(static_cast<std::size_t>(d));
  std::vector<double> ys(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    xs[static_cast<std::size_t>(i)] = q * x.x[static_cast<std::size_t>(i)];
    ys[static_cast<std::size_t>(i)] = q * y.x[static_cast<std::size_t>(i)];
  }
  const auto limit = phi(ctx, xs, ys);
  s.record(label, 0, param, "phi", limit.value);
  s.record(label, 0, param, "phi_error", limit.error);
  s.timing(label, moment.products.size(), param + ";phi", elapsed_ns(start));

  Check c;
  c.id = label;
  c.estimate = moment.scaled.mean;
  c.se = moment.scaled.se;
  c.statistic = std::abs(moment.scaled.mean - limit.value);
  c.threshold = std::max(s.tol().localtime * limit.value, s.tol().z * moment.scaled.se + limit.error);
  c.comparator = "<=";
  c.note = "phi = " + format_number(limit.value);
  s.check(std::move(c));
}

void hit_block(Session& s, const std::string& label, const OffspringDist& mu, const JumpDist& theta, const Site& a,
               std::size_t cap, std::size_t trials) {
  const int d = theta.dim();
  if (cap == 0) cap = default_hitting_cap(a);
  const auto est = estimate_hitting_prob(mu, theta, a, cap, s.plan(label, trials));
  const std::string param = "d=" + std::to_string(d) + ";a=" + site_text(a, d) + ";cap=" + std::to_string(cap);
  for (std::size_t b = 0; b < est.batch_hits.size(); ++b) {
    const double w = static_cast<double>(std::min(kHitBatch, trials - b * kHitBatch));
    s.record(label, b, param, "hits", static_cast<double>(est.batch_hits[b]), w);
    s.record(label, b, param, "capped", static_cast<double>(est.batch_capped[b]), w);
    s.timing(label, b, param, est.batch_runtime_ns[b]);
  }
  const double norm2 = mahalanobis2(theta, a);
  const double target = visit_limit_constant(LimitContext(mu, theta));
  s.record(label, 0, param, "norm2", norm2);
  s.record(label, 0, param, "target", target);

  Check ratio;
  ratio.id = label + ".ratio";
  ratio.estimate = norm2 * est.p_hat;
  ratio.se = norm2 * est.se;
  ratio.statistic = std::abs(ratio.estimate / target - 1.0);
  ratio.threshold = s.tol().hit;
  ratio.comparator = "<=";
  ratio.note = "target " + format_number(target);
  s.check(std::move(ratio));

  Check capped;
  capped.id = label + ".capped";
  capped.estimate = est.capped_fraction;
  capped.statistic = est.p_hat > 0.0 ? est.capped_fraction / est.p_hat : std::numeric_limits<double>::infinity();
  capped.threshold = s.tol().capped;
  capped.comparator = "<";
  capped.note = "capped fraction relative to p";
  s.check(std::move(capped));

  // P(#T > cap) ~ 2 / (rho sqrt(2 pi cap)) bounds the mass the cap can hide.
  Check tail;
  tail.id = label + ".cap_tail";
  tail.estimate = 2.0 / (mu.rho() * std::sqrt(2.0 * std::numbers::pi * static_cast<double>(cap)));
  tail.statistic = est.p_hat > 0.0 ? tail.estimate / est.p_hat : std::numeric_limits<double>::infinity();
  tail.comparator = "report";
  tail.gating = false;
  tail.note = "tail bound on P(#T > cap), and its ratio to p";
  s.check(std::move(tail));
}

void brw_block(Session& s, const std::string& label, const OffspringDist& mu, const JumpDist& theta, const Site& a,
               std::size_t p, std::size_t cap, std::size_t trials) {
  const int d = theta.dim();
  if (cap == 0) cap = default_hitting_cap(a);
  const auto id = brw_hit_identity_check(a, p, mu, theta, cap, s.plan(label + ".lhs", trials), s.plan(label + ".rhs", trials));
  const std::string param = "d=" + std::to_string(d) + ";a=" + site_text(a, d) + ";p=" + std::to_string(p) + ";cap=" + std::to_string(cap);
  auto emit = [&](const HittingEstimate& e, const std::string& side) {
    for (std::size_t b = 0; b < e.batch_hits.size(); ++b) {
      const double w = static_cast<double>(std::min(kHitBatch, trials - b * kHitBatch));
      s.record(label, b, param, side + "_hits", static_cast<double>(e.batch_hits[b]), w);
      s.record(label, b, param, side + "_capped", static_cast<double>(e.batch_capped[b]), w);
      s.timing(label + "." + side, b, param, e.batch_runtime_ns[b]);
    }
  };
  emit(id.lhs, "lhs");
  emit(id.single, "single");

  Check c;
  c.id = label;
  c.estimate = id.lhs.p_hat - id.rhs;
  c.se = std::hypot(id.lhs.se, id.rhs_se);
  c.statistic = std::abs(id.z);
  c.threshold = s.tol().z;
  c.comparator = "<";
  c.note = "lhs " + format_number(id.lhs.p_hat) + ", rhs " + format_number(id.rhs);
  s.check(std::move(c));
}

struct SnakeVolumes {
  std::vector<double> at_h;
  std::vector<double> at_half_h;
  std::vector<double> at_alt;
  std::vector<double> mass;
};

/// c^{-d} times the occupied-cell volume of independent snakes, at h, h/2
/// and optionally a third cell width.
SnakeVolumes snake_block(Session& s, const std::string& label, int d, double c, std::size_t m, double h, double alt_h,
                         std::size_t trials) {
  struct Trial {
    double at_h;
    double at_half_h;
    double at_alt;
    double mass;
    double max;
    std::int64_t ns;
  };
  const double norm = std::pow(c, -d);
  const auto results = run_trials(s.plan(label, trials), [&](std::size_t, Stream& rng) {
    const auto start = Clock::now();
    const auto snake = evolve_head(sample_excursion(m, rng), d, rng);
    const auto grid = occupation_grid(snake, h);
    Trial t{};
    t.at_h = norm * grid.volume();
    t.at_half_h = norm * occupation_grid(snake, 0.5 * h).volume();
    t.at_alt = alt_h > 0.0 ? norm * occupation_grid(snake, alt_h).volume() : 0.0;
    t.mass = grid.total_mass();
    t.max = snake.excursion().max();
    t.ns = elapsed_ns(start);
    return t;
  });
  const std::string param = "d=" + std::to_string(d) + ";m=" + std::to_string(m) + ";h=" + format_number(h);
  SnakeVolumes out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& t = results[i];
    s.record(label, i, param, "scaled_volume", t.at_h);
    s.record(label, i, param, "scaled_volume_half_h", t.at_half_h);
    if (alt_h > 0.0) s.record(label, i, param + ";alt_h=" + format_number(alt_h), "scaled_volume_alt_h", t.at_alt);
    s.record(label, i, param, "mass", t.mass);
    s.record(label, i, param, "excursion_max", t.max);
    s.timing(label, i, param, t.ns);
    out.at_h.push_back(t.at_h);
    out.at_half_h.push_back(t.at_half_h);
    out.at_alt.push_back(t.at_alt);
    out.mass.push_back(t.mass);
  }
  double worst = 0.0;
  for (double v : out.mass) worst = std::max(worst, std::abs(v - 1.0));
  Check mass;
  mass.id = label + ".mass";
  mass.estimate = worst;
  mass.statistic = worst;
  mass.threshold = 1e-12;
  mass.comparator = "<=";
  mass.note = "largest |histogram mass - 1|";
  s.check(std::move(mass));
  return out;
}

double mean_of(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

// ---- the acceptance suite ----

void suite_kemperman(Session& s) {
  const std::string label = "c1.kemperman";
  const auto start = Clock::now();
  const auto mu = OffspringDist::geometric_half();
  constexpr std::size_t kMax = 2000;
  const auto pmf = total_progeny_pmf(mu, kMax);
  for (std::size_t k = 1; k <= kMax; ++k) s.record(label, k, "mu=geometric", "pmf", pmf[k - 1]);

  const double ratio = kemperman_ratio(mu, kMax);
  Check r;
  r.id = "c1.kemperman_ratio";
  r.estimate = ratio;
  r.statistic = std::abs(ratio - 1.0);
  r.threshold = s.tol().kemperman;
  r.comparator = "<=";
  r.note = "k = 2000";
  s.check(std::move(r));

  // Catalan(k-1) / 2^{2k-1} through the recurrence C_j = C_{j-1} 2(2j-1)/(j+1).
  double worst = 0.0;
  double catalan = 1.0;  // C_0
  for (std::size_t k = 1; k <= 20; ++k) {
    if (k > 1) {
      const double j = static_cast<double>(k - 1);
      catalan = catalan * 2.0 * (2.0 * j - 1.0) / (j + 1.0);
    }
    const double exact = std::ldexp(catalan, -static_cast<int>(2 * k - 1));
    worst = std::max(worst, std::abs(pmf[k - 1] - exact));
  }
  Check c;
  c.id = "c1.catalan";
  c.estimate = worst;
  c.statistic = worst;
  c.threshold = s.tol().catalan;
  c.comparator = "<=";
  c.note = "k <= 20";
  s.check(std::move(c));

  std::array<double, 4> ratios{};
  const std::array<std::size_t, 4> ks{250, 500, 1000, 2000};
  for (std::size_t i = 0; i < ks.size(); ++i) ratios[i] = kemperman_ratio(mu, ks[i]);
  double violation = 0.0;
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    violation = std::max(violation, std::abs(ratios[i] - 1.0) - std::abs(ratios[i - 1] - 1.0));
  }
  Check mono;
  mono.id = "c1.monotone";
  mono.estimate = violation;
  mono.statistic = violation;
  mono.threshold = 1e-9;
  mono.comparator = "report";
  mono.gating = false;
  mono.note = "largest increase of |ratio - 1| along k = 250, 500, 1000, 2000";
  s.check(std::move(mono));
  s.timing(label, 0, "mu=geometric", elapsed_ns(start));
}

void suite_shapes(Session& s) {
  const std::string label = "c2.shapes";
  const auto mu = OffspringDist::geometric_half();
  const std::vector<std::vector<std::uint32_t>> shapes{{1, 1, 1, 0}, {1, 2, 0, 0}, {2, 0, 1, 0}, {2, 1, 0, 0}, {3, 0, 0, 0}};
  const std::size_t trials = s.count(1e5);
  const auto start = Clock::now();
  const auto index = run_trials(s.plan(label, trials), [&](std::size_t, Stream& rng) {
    const auto tree = sample_gw_conditioned(mu, 4, rng);
    const auto counts = tree.child_counts();
    const std::vector<std::uint32_t> word(counts.begin(), counts.end());
    return static_cast<std::size_t>(std::find(shapes.begin(), shapes.end(), word) - shapes.begin());
  });
  std::vector<double> observed(shapes.size(), 0.0);
  for (std::size_t k : index) {
    if (k >= shapes.size()) throw std::logic_error("sampled tree is not a 4-vertex plane tree");
    observed[k] += 1.0;
  }
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    std::string word;
    for (auto v : shapes[k]) word += std::to_string(v);
    s.record(label, k, "n=4;shape=" + word, "count", observed[k]);
  }
  s.timing(label, 0, "n=4", elapsed_ns(start));
  const std::vector<double> probs(shapes.size(), 1.0 / static_cast<double>(shapes.size()));
  const auto chi = chi_square_gof(observed, probs);
  Check c;
  c.id = label;
  c.estimate = chi.statistic;
  c.statistic = chi.p_value;
  c.threshold = s.tol().alpha;
  c.comparator = ">=";
  c.note = "chi-square, 4 dof";
  s.check(std::move(c));
}

void suite_llt(Session& s) {
  for (int d : {1, 2}) {
    const std::string label = "c3.llt.d" + std::to_string(d);
    const auto start = Clock::now();
    const auto theta = JumpDist::lazy_simple(d);
    std::map<int, double> delta;
    for (int n : {12, 50, 200}) {
      delta[n] = llt_deviation(theta, n);
      s.record(label, static_cast<std::uint64_t>(n), "d=" + std::to_string(d) + ";n=" + std::to_string(n), "delta", delta[n]);
    }
    s.timing(label, 0, "d=" + std::to_string(d), elapsed_ns(start));
    Check a;
    a.id = label + ".200_vs_50";
    a.estimate = delta[200];
    a.statistic = delta[200] / delta[50];
    a.threshold = 1.0;
    a.comparator = "<";
    s.check(std::move(a));
    Check b;
    b.id = label + ".200_vs_12";
    b.estimate = delta[200];
    b.statistic = delta[200] / delta[12];
    b.threshold = 0.5;
    b.comparator = "<";
    s.check(std::move(b));
  }
}

/// Lattice target floor(n^{1/4} M^{1/2} sqrt(2/rho) x) for a point x in the
/// limit coordinates of the local-time convergence.
Site convlt_target(const JumpDist& theta, double rho, std::size_t n, const std::vector<double>& x) {
  const int d = theta.dim();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(theta.covariance());
  const Eigen::MatrixXd root = eig.operatorSqrt();
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = x[static_cast<std::size_t>(i)];
  const Eigen::VectorXd t = std::pow(static_cast<double>(n), 0.25) * std::sqrt(2.0 / rho) * (root * v);
  Site s;
  for (int i = 0; i < d; ++i) s.x[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(std::floor(t(i)));
  return s;
}

void suite_localtime(Session& s) {
  const auto mu = OffspringDist::geometric_half();
  const auto theta = JumpDist::lazy_simple(2);
  constexpr std::size_t n = 60000;
  const Site x = convlt_target(theta, mu.rho(), n, {0.6, 0.0});
  const Site y = convlt_target(theta, mu.rho(), n, {0.0, 0.6});
  localtime_block(s, "c4.localtime", mu, theta, n, x, y, s.count(2e4));
}

/// Holding probability of the lazy nearest-neighbour law used for hitting.
constexpr double kHitHold = 0.75;

void suite_hitting(Session& s) {
  const auto mu = OffspringDist::geometric_half();
  for (int d : {1, 2, 3}) {
    const auto theta = JumpDist::lazy_simple(d, kHitHold);
    for (int r : {10, 20}) {
      Site a;
      a.x[0] = r;
      const std::string label = "c5.hit.d" + std::to_string(d) + ".a" + std::to_string(r);
      s.guarded(label, [&] { hit_block(s, label, mu, theta, a, 0, s.count(2e4 * r * r / 2.0)); });
    }
  }
}

void suite_brw(Session& s) {
  const auto mu = OffspringDist::geometric_half();
  const auto theta = JumpDist::lazy_simple(2);
  Site a;
  a.x[0] = 3;
  brw_block(s, "c6.brw_identity", mu, theta, a, 5, 0, s.count(1e5));
}

void suite_range(Session& s) {
  const auto mu = OffspringDist::geometric_half();
  const auto theta = JumpDist::lazy_simple(2);
  const std::size_t trials = s.count(1e3);
  const auto small = range_block(s, "c7.range.n20000", mu, theta, 20000, trials);
  const auto large = range_block(s, "c7.range.n80000", mu, theta, 80000, trials);
  ks_check(s, "c7.range_ks", small, large, true, "n = 2e4 vs 8e4");

  const LimitContext ctx(mu, theta);
  // The lattice cell in limit coordinates has width c n^{-1/4}.
  const double lattice_h = ctx.c() * std::pow(80000.0, -0.25);
  const auto snakes = snake_block(s, "c7.snake", 2, ctx.c(), 100000, 0.02, lattice_h, trials);
  ks_check(s, "c7.snake_ks", large, snakes.at_h, true, "n = 8e4 vs snake volume at h = 0.02");
  ks_check(s, "c7.snake_ks_lattice_h", large, snakes.at_alt, false, "snake volume at h = c n^{-1/4} = " + format_number(lattice_h));

  Check means;
  means.id = "c7.means";
  means.estimate = mean_of(large);
  means.statistic = mean_of(snakes.at_h);
  means.threshold = mean_of(snakes.at_half_h);
  means.comparator = "report";
  means.gating = false;
  means.note = "mean scaled range n=8e4 (estimate), snake volume at h (statistic) and h/2 (threshold)";
  s.check(std::move(means));
}

void suite_covariance(Session& s) {
  const std::string label = "c8.covariance";
  constexpr std::size_t m = 10000;
  constexpr std::size_t pairs = 10;
  Stream fixed = trial_stream(*s.cfg().seed, experiment_tag("c8.excursion"), 0);
  const auto excursion = sample_excursion(m, fixed);
  Stream picks = fixed.substream(1);
  std::vector<std::pair<std::size_t, std::size_t>> ij;
  for (std::size_t k = 0; k < pairs; ++k) ij.emplace_back(1 + picks.below(m - 1), 1 + picks.below(m - 1));

  const std::size_t trials = s.count(1e4);
  const auto heads = run_trials(s.plan(label, trials), [&](std::size_t, Stream& rng) {
    const auto snake = evolve_head(excursion, 1, rng);
    std::array<double, 2 * pairs> out{};
    for (std::size_t k = 0; k < pairs; ++k) {
      out[2 * k] = snake.head(ij[k].first)[0];
      out[2 * k + 1] = snake.head(ij[k].second)[0];
    }
    return out;
  });

  for (std::size_t k = 0; k < pairs; ++k) {
    const auto [i, j] = ij[k];
    const std::string param = "pair=" + std::to_string(k) + ";i=" + std::to_string(i) + ";j=" + std::to_string(j);
    const double target = excursion.grid_min(i, j);
    s.record(label, 0, param, "m_e", target);
    std::vector<double> ws;
    std::vector<double> wt;
    for (std::size_t t = 0; t < heads.size(); ++t) {
      ws.push_back(heads[t][2 * k]);
      wt.push_back(heads[t][2 * k + 1]);
      s.record(label, t, param, "ws", ws.back());
      s.record(label, t, param, "wt", wt.back());
    }
    const double ms = mean_of(ws);
    const double mt = mean_of(wt);
    std::vector<double> prod;
    for (std::size_t t = 0; t < ws.size(); ++t) prod.push_back((ws[t] - ms) * (wt[t] - mt));
    const auto est = estimate_mean(prod);
    const double nn = static_cast<double>(prod.size());
    const double cov = est.mean * nn / (nn - 1.0);
    Check c;
    c.id = label + ".pair" + std::to_string(k);
    c.estimate = cov;
    c.se = est.se;
    c.statistic = std::abs(cov - target) / est.se;
    c.threshold = s.tol().z;
    c.comparator = "<=";
    c.note = "m_e = " + format_number(target);
    s.check(std::move(c));
  }
}

/// Trapezoid rule on a fine z-grid for int p_{r1}(z) p_{r2}(x-z) p_{r3}(y-z) dz
/// with unit covariance in d = 1.
double inner_kernel_grid(double x, double y, double r1, double r2, double r3) {
  auto g = [](double t, double z) { return std::exp(-z * z / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t); };
  constexpr double lo = -30.0;
  constexpr double hi = 30.0;
  constexpr std::size_t steps = 600000;
  const double dz = (hi - lo) / static_cast<double>(steps);
  double sum = 0.0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double z = lo + dz * static_cast<double>(k);
    const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
    sum += w * g(r1, z) * g(r2, x - z) * g(r3, y - z);
  }
  return sum * dz;
}

void suite_closed_forms(Session& s) {
  const std::string label = "c9.closed";
  const auto start = Clock::now();
  auto exact = [&](const std::string& id, double value, double expected, double tol) {
    s.record(label, 0, id, "value", value);
    Check c;
    c.id = id;
    c.estimate = value;
    c.statistic = std::abs(value - expected);
    c.threshold = tol;
    c.comparator = "<=";
    c.note = "expected " + format_number(expected);
    s.check(std::move(c));
  };

  exact("c9.triple_mass", triple_density_mass(), 1.0, s.tol().closed_form);

  const LimitContext unit(2.0, Eigen::MatrixXd::Identity(1, 1));
  const std::array<double, 1> x{1.0};
  const std::array<double, 1> y{-1.0};
  const double closed = inner_kernel(unit, x, y, 0.3, 0.5, 0.7);
  exact("c9.inner_kernel", closed, inner_kernel_grid(1.0, -1.0, 0.3, 0.5, 0.7), s.tol().closed_form);

  const std::array<double, 3> o{0.0, 0.0, 0.0};
  const std::array<double, 3> e1{1.0, 0.0, 0.0};
  const std::array<double, 2> o2{0.0, 0.0};
  const std::array<double, 2> p2{2.0, 0.0};
  const std::array<double, 1> o1{0.0};
  const std::array<double, 1> p1{1.0};
  exact("c9.hitting_constant.d3", hitting_constant(3, o, e1), 0.5, 0.0);
  exact("c9.hitting_constant.d2", hitting_constant(2, o2, p2), 0.25, 0.0);
  exact("c9.hitting_constant.d1", hitting_constant(1, o1, p1), 1.5, 0.0);

  exact("c9.visit_constant.d2_rho2_2", visit_limit_constant(LimitContext(2.0, Eigen::MatrixXd::Identity(2, 2))), 2.0, 0.0);
  exact("c9.visit_constant.d3_rho2_1", visit_limit_constant(LimitContext(1.0, Eigen::MatrixXd::Identity(3, 3))), 2.0, 0.0);
  exact("c9.visit_constant.d1_rho2_2", visit_limit_constant(LimitContext(2.0, Eigen::MatrixXd::Identity(1, 1))), 3.0, 0.0);
  s.timing(label, 0, "closed", elapsed_ns(start));
}

void suite_distance_profile(Session& s) {
  const std::string label = "r.distance_profile";
  const auto mu = OffspringDist::geometric_half();
  constexpr std::size_t n = 2000;
  constexpr std::size_t k_max = 50;
  const auto worst = run_trials(s.plan(label, s.count(20)), [&](std::size_t, Stream& rng) {
    const auto profile = distance_profile(sample_gw_conditioned(mu, n, rng), k_max);
    double w = 0.0;
    for (std::size_t k = 1; k <= k_max; ++k) w = std::max(w, static_cast<double>(profile[k]) / static_cast<double>(k * n));
    return w;
  });
  for (std::size_t i = 0; i < worst.size(); ++i) s.record(label, i, "n=2000;k_max=50", "max_pairs_over_kn", worst[i]);
  Check c;
  c.id = label;
  c.estimate = mean_of(worst);
  c.statistic = *std::max_element(worst.begin(), worst.end());
  c.comparator = "report";
  c.gating = false;
  c.note = "pairs at distance k over k n, largest over k <= 50";
  s.check(std::move(c));
}

void run_suite(Session& s) {
  s.guarded("c1", [&] { suite_kemperman(s); });
  s.guarded("c2", [&] { suite_shapes(s); });
  s.guarded("c3", [&] { suite_llt(s); });
  s.guarded("c4", [&] { suite_localtime(s); });
  suite_hitting(s);
  s.guarded("c6", [&] { suite_brw(s); });
  s.guarded("c7", [&] { suite_range(s); });
  s.guarded("c8", [&] { suite_covariance(s); });
  s.guarded("c9", [&] { suite_closed_forms(s); });
  s.guarded("r", [&] { suite_distance_profile(s); });
}

// ---- single experiments ----

void run_range(Session& s) {
  const auto& cfg = s.cfg();
  const auto mu = make_offspring(cfg.mu);
  const auto theta = make_jump(cfg.theta, cfg.d);
  std::vector<std::vector<double>> samples;
  for (std::size_t n : cfg.sizes) {
    samples.push_back(range_block(s, "range.n" + std::to_string(n), mu, theta, n, s.count(static_cast<double>(cfg.trials))));
    const double bound = std::pow(static_cast<double>(n), 1.0 - 0.25 * cfg.d);
    double worst = 0.0;
    for (double v : samples.back()) worst = std::max(worst, v / bound);
    Check c;
    c.id = "range.n" + std::to_string(n) + ".bounds";
    c.estimate = mean_of(samples.back());
    c.statistic = worst;
    c.threshold = 1.0;
    c.comparator = "<=";
    c.note = "largest value over n^{1-d/4}";
    s.check(std::move(c));
  }
  if (samples.size() >= 2) {
    ks_check(s, "range.ks", samples.front(), samples.back(), true,
             "n = " + std::to_string(cfg.sizes.front()) + " vs " + std::to_string(cfg.sizes.back()));
  }
}

void run_localtime(Session& s) {
  const auto& cfg = s.cfg();
  const auto mu = make_offspring(cfg.mu);
  const auto theta = make_jump(cfg.theta, cfg.d);
  localtime_block(s, "localtime", mu, theta, cfg.sizes.front(), to_site(cfg.x), to_site(cfg.y), s.count(static_cast<double>(cfg.trials)));
}

void run_hit(Session& s) {
  const auto& cfg = s.cfg();
  hit_block(s, "hit", make_offspring(cfg.mu), make_jump(cfg.theta, cfg.d), to_site(cfg.a), cfg.cap,
            s.count(static_cast<double>(cfg.trials)));
}

void run_brw(Session& s) {
  const auto& cfg = s.cfg();
  brw_block(s, "brw_identity", make_offspring(cfg.mu), make_jump(cfg.theta, cfg.d), to_site(cfg.a), cfg.p, cfg.cap,
            s.count(static_cast<double>(cfg.trials)));
}

void run_snake(Session& s) {
  const auto& cfg = s.cfg();
  const LimitContext ctx(make_offspring(cfg.mu), make_jump(cfg.theta, cfg.d));
  const auto v = snake_block(s, "snake", cfg.d, ctx.c(), cfg.m, cfg.h, 0.0, s.count(static_cast<double>(cfg.trials)));
  Check c;
  c.id = "snake.volume";
  c.estimate = mean_of(v.at_h);
  c.statistic = mean_of(v.at_half_h);
  c.comparator = "report";
  c.gating = false;
  c.note = "mean c^{-d} volume at h (estimate) and h/2 (statistic)";
  s.check(std::move(c));

  // The first snake's occupation grid and head path, for offline analysis.
  Stream rng = trial_stream(*cfg.seed, experiment_tag("snake"), 0);
  const auto snake = evolve_head(sample_excursion(cfg.m, rng), cfg.d, rng);
  std::filesystem::create_directories(cfg.out);
  std::ofstream grid(cfg.out / "occupation_grid.csv");
  occupation_grid(snake, cfg.h).write_csv(grid);
  std::ofstream heads(cfg.out / "heads.f32", std::ios::binary);
  write_heads_binary(snake, heads);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::optional<ExperimentKind> parse_kind(std::string_view name) {
  if (name == "range") return ExperimentKind::Range;
  if (name == "localtime") return ExperimentKind::LocalTime;
  if (name == "hit") return ExperimentKind::Hit;
  if (name == "brw-identity") return ExperimentKind::BrwIdentity;
  if (name == "snake") return ExperimentKind::Snake;
  if (name == "verify-all") return ExperimentKind::VerifyAll;
  return std::nullopt;
}

std::string_view kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Range:
      return "range";
    case ExperimentKind::LocalTime:
      return "localtime";
    case ExperimentKind::Hit:
      return "hit";
    case ExperimentKind::BrwIdentity:
      return "brw-identity";
    case ExperimentKind::Snake:
      return "snake";
    case ExperimentKind::VerifyAll:
      return "verify-all";
  }
  return "unknown";
}

ConfigMap parse_config(std::istream& in) {
  ConfigMap map;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
    map[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return map;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_config(in);
}

ExperimentConfig ExperimentConfig::from_map(ExperimentKind kind, const ConfigMap& map) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.workers = default_workers();
  const std::map<std::string, double*> tolerances{
      {"tol.kemperman", &cfg.tol.kemperman}, {"tol.catalan", &cfg.tol.catalan},     {"tol.alpha", &cfg.tol.alpha},
      {"tol.z", &cfg.tol.z},                 {"tol.localtime", &cfg.tol.localtime}, {"tol.hit", &cfg.tol.hit},
      {"tol.capped", &cfg.tol.capped},       {"tol.closed_form", &cfg.tol.closed_form}};

  for (const auto& [key, value] : map) {
    if (key == "experiment") {
      if (parse_kind(value) != kind) throw ConfigError("config is for experiment '" + value + "'");
    } else if (key == "d") {
      cfg.d = parse_number<int>(key, value);
    } else if (key == "mu") {
      cfg.mu = value;
    } else if (key == "theta") {
      cfg.theta = value;
    } else if (key == "sizes" || key == "n") {
      cfg.sizes = parse_list<std::size_t>(key, value);
    } else if (key == "trials") {
      cfg.trials = parse_number<std::size_t>(key, value);
    } else if (key == "cap") {
      cfg.cap = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "workers") {
      cfg.workers = parse_number<unsigned>(key, value);
    } else if (key == "out") {
      cfg.out = value;
    } else if (key == "x") {
      cfg.x = parse_list<std::int32_t>(key, value);
    } else if (key == "y") {
      cfg.y = parse_list<std::int32_t>(key, value);
    } else if (key == "a") {
      cfg.a = parse_list<std::int32_t>(key, value);
    } else if (key == "p") {
      cfg.p = parse_number<std::size_t>(key, value);
    } else if (key == "m") {
      cfg.m = parse_number<std::size_t>(key, value);
    } else if (key == "h") {
      cfg.h = parse_number<double>(key, value);
    } else if (key == "scale") {
      cfg.scale = parse_number<double>(key, value);
    } else if (const auto it = tolerances.find(key); it != tolerances.end()) {
      *it->second = parse_number<double>(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  if (!seed) throw ConfigError("a seed is required (config key 'seed' or --seed)");
  if (trials == 0) throw ConfigError("trials must be at least 1");
  if (workers == 0) throw ConfigError("workers must be at least 1");
  if (!(scale > 0.0)) throw ConfigError("scale must be positive");
  if (kind == ExperimentKind::VerifyAll) return;

  if (d < 1 || d > 3) throw ConfigError("d must be 1, 2 or 3");
  try {
    make_offspring(mu);
    make_jump(theta, d);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid law: ") + e.what());
  }
  auto need_site = [&](const std::vector<std::int32_t>& v, const char* name) {
    if (v.size() != static_cast<std::size_t>(d)) throw ConfigError(std::string("'") + name + "' needs d coordinates");
    if (std::all_of(v.begin(), v.end(), [](std::int32_t c) { return c == 0; })) throw ConfigError(std::string("'") + name + "' must be nonzero");
  };
  switch (kind) {
    case ExperimentKind::Range:
      if (sizes.empty()) throw ConfigError("range needs 'sizes'");
      break;
    case ExperimentKind::LocalTime:
      if (sizes.empty()) throw ConfigError("localtime needs 'n'");
      need_site(x, "x");
      need_site(y, "y");
      break;
    case ExperimentKind::Hit:
      need_site(a, "a");
      break;
    case ExperimentKind::BrwIdentity:
      need_site(a, "a");
      if (p == 0) throw ConfigError("p must be at least 1");
      break;
    case ExperimentKind::Snake:
      if (m < 2 || m % 2 != 0) throw ConfigError("m must be even and at least 2");
      if (!(h > 0.0)) throw ConfigError("h must be positive");
      break;
    case ExperimentKind::VerifyAll:
      break;
  }
  for (std::size_t n : sizes) {
    if (n == 0) throw ConfigError("sizes must be positive");
  }
}

OffspringDist make_offspring(const std::string& spec) {
  if (spec == "geometric") return OffspringDist::geometric_half();
  if (spec == "binary") return OffspringDist::binary();
  if (spec == "poisson") return OffspringDist::poisson_one();
  if (spec.rfind("pmf:", 0) == 0) return OffspringDist(parse_list<double>("mu", spec.substr(4)));
  throw ConfigError("unknown offspring law '" + spec + "'");
}

JumpDist make_jump(const std::string& spec, int d) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
  if (name == "lazy") return arg.empty() ? JumpDist::lazy_simple(d) : JumpDist::lazy_simple(d, parse_number<double>("theta", arg));
  if (name == "product" && arg.empty()) return JumpDist::lazy_product(d);
  if (name == "box") return JumpDist::box_minus_center(d, arg.empty() ? 1 : parse_number<int>("theta", arg));
  if (name == "file") {
    std::ifstream in(arg);
    if (!in) throw ConfigError("cannot read jump law file " + arg);
    auto theta = JumpDist::parse(in);
    if (theta.dim() != d) throw ConfigError("jump law file has dimension " + std::to_string(theta.dim()));
    return theta;
  }
  throw ConfigError("unknown jump law '" + spec + "'");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

bool compare(double statistic, std::string_view comparator, double threshold) {
  if (comparator == "report") return true;
  if (std::isnan(statistic)) return false;
  if (comparator == "<") return statistic < threshold;
  if (comparator == "<=") return statistic <= threshold;
  if (comparator == ">=") return statistic >= threshold;
  throw std::invalid_argument("unknown comparator '" + std::string(comparator) + "'");
}

bool Report::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return !c.gating || c.pass; });
}

const Check* Report::find(std::string_view id) const {
  const auto it = std::find_if(checks.begin(), checks.end(), [&](const Check& c) { return c.id == id; });
  return it == checks.end() ? nullptr : &*it;
}

void Report::print_table(std::ostream& out) const {
  std::size_t width = 5;
  for (const auto& c : checks) width = std::max(width, c.id.size());
  out << std::left << std::setw(static_cast<int>(width)) << "check" << "  " << std::setw(13) << "estimate" << std::setw(13)
      << "statistic" << std::setw(8) << "cmp" << std::setw(13) << "threshold" << "verdict\n";
  for (const auto& c : checks) {
    const char* verdict = !c.gating ? "report" : c.pass ? "PASS" : "FAIL";
    out << std::left << std::setw(static_cast<int>(width)) << c.id << "  " << std::setw(13) << std::setprecision(6) << c.estimate
        << std::setw(13) << c.statistic << std::setw(8) << c.comparator << std::setw(13) << c.threshold << verdict << '\n';
  }
  out << (all_pass() ? "all checks passed" : "some checks FAILED") << '\n';
}

void Report::write(const std::filesystem::path& dir, const ExperimentConfig& cfg) const {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("records.csv");
    f << "experiment,trial_id,param,quantity,value,weight\n";
    for (const auto& r : records) {
      f << csv_field(r.experiment) << ',' << r.trial_id << ',' << csv_field(r.param) << ',' << r.quantity << ','
        << format_number(r.value) << ',' << format_number(r.weight) << '\n';
    }
  }
  {
    auto f = open("timings.csv");
    f << "experiment,trial_id,param,runtime_ns\n";
    for (const auto& t : timings) f << csv_field(t.experiment) << ',' << t.trial_id << ',' << csv_field(t.param) << ',' << t.runtime_ns << '\n';
  }
  {
    auto f = open("checks.csv");
    f << "id,estimate,se,statistic,threshold,comparator,pass,gating,note\n";
    for (const auto& c : checks) {
      f << c.id << ',' << format_number(c.estimate) << ',' << format_number(c.se) << ',' << format_number(c.statistic) << ','
        << format_number(c.threshold) << ',' << c.comparator << ',' << (c.pass ? 1 : 0) << ',' << (c.gating ? 1 : 0) << ','
        << csv_field(c.note) << '\n';
    }
  }
  nlohmann::ordered_json j;
  j["schema"] = kReportSchema;
  j["experiment"] = kind_name(cfg.kind);
  j["seed"] = *cfg.seed;
  j["scale"] = cfg.scale;
  if (cfg.kind != ExperimentKind::VerifyAll) {
    j["config"] = {{"d", cfg.d},       {"mu", cfg.mu}, {"theta", cfg.theta}, {"sizes", cfg.sizes}, {"trials", cfg.trials},
                   {"cap", cfg.cap},   {"x", cfg.x},   {"y", cfg.y},         {"a", cfg.a},         {"p", cfg.p},
                   {"m", cfg.m},       {"h", cfg.h}};
  }
  j["tolerances"] = {{"kemperman", cfg.tol.kemperman}, {"catalan", cfg.tol.catalan}, {"alpha", cfg.tol.alpha},
                     {"z", cfg.tol.z},                 {"localtime", cfg.tol.localtime}, {"hit", cfg.tol.hit},
                     {"capped", cfg.tol.capped},       {"closed_form", cfg.tol.closed_form}};
  auto number = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return format_number(v);
  };
  auto& list = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    list.push_back({{"id", c.id},
                    {"estimate", number(c.estimate)},
                    {"se", number(c.se)},
                    {"statistic", number(c.statistic)},
                    {"threshold", number(c.threshold)},
                    {"comparator", c.comparator},
                    {"pass", c.pass},
                    {"gating", c.gating},
                    {"note", c.note}});
  }
  j["all_pass"] = all_pass();
  auto f = open("summary.json");
  f << j.dump(2) << '\n';
}

Report run(const ExperimentConfig& cfg) {
  cfg.validate();
  Report report;
  Session s(cfg, report);
  switch (cfg.kind) {
    case ExperimentKind::Range:
      s.guarded("range", [&] { run_range(s); });
      break;
    case ExperimentKind::LocalTime:
      s.guarded("localtime", [&] { run_localtime(s); });
      break;
    case ExperimentKind::Hit:
      s.guarded("hit", [&] { run_hit(s); });
      break;
    case ExperimentKind::BrwIdentity:
      s.guarded("brw_identity", [&] { run_brw(s); });
      break;
    case ExperimentKind::Snake:
      s.guarded("snake", [&] { run_snake(s); });
      break;
    case ExperimentKind::VerifyAll:
      run_suite(s);
      break;
  }
  report.write(cfg.out, cfg);
  return report;
}

}  // namespace treerange
