#pragma once

// Experiment runner: flat key-value configuration, seeded parallel runs,
// per-trial records, checks with thresholds and verdicts, and the reports
// records.csv, timings.csv, checks.csv and summary.json.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treerange/gw_trees.hpp"
#include "treerange/lattice.hpp"

namespace treerange {

inline constexpr std::string_view kReportSchema = "treerange-report/1";

enum class ExperimentKind { Range, LocalTime, Hit, BrwIdentity, Snake, VerifyAll };

std::optional<ExperimentKind> parse_kind(std::string_view name);
std::string_view kind_name(ExperimentKind kind);

/// Pass thresholds; every field can be overridden with a "tol.<name>" key.
struct Tolerances {
  double kemperman = 0.05;    // |ratio - 1| at k = 2000
  double catalan = 1e-12;     // exact pmf vs Catalan(k-1) / 2^{2k-1}
  double alpha = 0.01;        // chi-square and KS level
  double z = 3.0;             // MC-vs-MC and MC-vs-quadrature bands, in SE
  double localtime = 0.10;    // relative floor of the local-time band
  double hit = 0.15;          // relative band for |M^{-1/2} a|^2 p
  double capped = 0.05;       // capped fraction relative to p
  double closed_form = 1e-6;  // quadrature-based closed-form checks
};

/// "key = value" lines; '#' starts a comment. Later keys override earlier ones.
using ConfigMap = std::map<std::string, std::string>;
ConfigMap parse_config(std::istream& in);
ConfigMap load_config_file(const std::filesystem::path& path);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::VerifyAll;
  int d = 2;
  std::string mu = "geometric";  // geometric | binary | poisson | pmf:p0,p1,...
  std::string theta = "lazy";    // lazy[:hold] | product | box[:r] | file:path
  std::vector<std::size_t> sizes;
  std::size_t trials = 1000;
  std::size_t cap = 0;  // 0: 200 |a|^4 for hitting runs
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::filesystem::path out = "treerange_out";
  std::vector<std::int32_t> x, y, a;
  std::size_t p = 5;
  std::size_t m = 100000;
  double h = 0.02;
  /// Multiplies every trial count (quick runs); thresholds are unchanged.
  double scale = 1.0;
  Tolerances tol;

  /// Unknown keys and malformed values throw ConfigError.
  static ExperimentConfig from_map(ExperimentKind kind, const ConfigMap& map);
  /// Throws ConfigError: missing seed, zero trials, unusable laws or targets.
  void validate() const;
};

OffspringDist make_offspring(const std::string& spec);
JumpDist make_jump(const std::string& spec, int d);

struct Record {
  std::string experiment;
  std::uint64_t trial_id = 0;
  std::string param;
  std::string quantity;
  double value = 0.0;
  double weight = 1.0;
};

struct Timing {
  std::string experiment;
  std::uint64_t trial_id = 0;
  std::string param;
  std::int64_t runtime_ns = 0;
};

struct Check {
  std::string id;
  double estimate = 0.0;
  double se = 0.0;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string comparator;  // "<", "<=", ">=", or "report"
  bool pass = false;
  bool gating = true;
  std::string note;
};

/// Verdict of `statistic comparator threshold`; "report" always passes.
bool compare(double statistic, std::string_view comparator, double threshold);

struct Report {
  std::vector<Record> records;
  std::vector<Timing> timings;
  std::vector<Check> checks;

  bool all_pass() const;
  const Check* find(std::string_view id) const;
  void print_table(std::ostream& out) const;
  /// records.csv, timings.csv, checks.csv and summary.json in `dir`.
  void write(const std::filesystem::path& dir, const ExperimentConfig& cfg) const;
};

/// Runs the configured experiment and writes the report to cfg.out.
Report run(const ExperimentConfig& cfg);

/// Number formatting shared by every CSV: shortest round-trip form.
std::string format_number(double v);

}  // namespace treerange
