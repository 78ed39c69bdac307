// Command-line front end: one subcommand per experiment kind.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treerange/errors.hpp"
#include "treerange/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out;
  std::vector<std::string> set;
};

int execute(treerange::ExperimentKind kind, const Options& opt) {
  using namespace treerange;
  ConfigMap map = opt.config.empty() ? ConfigMap{} : load_config_file(opt.config);
  for (const auto& kv : opt.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    map[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  auto cfg = ExperimentConfig::from_map(kind, map);
  if (const char* env = std::getenv("TREERANGE_WORKERS"); env != nullptr && *env != '\0') {
    cfg.workers = static_cast<unsigned>(std::stoul(env));
  }
  if (opt.workers) cfg.workers = *opt.workers;
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.out.empty()) cfg.out = opt.out;

  const auto report = run(cfg);
  report.print_table(std::cout);
  std::cout << "report written to " << cfg.out.string() << '\n';
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo checks for random walks indexed by Galton-Watson trees"};
  app.require_subcommand(1);
  Options opt;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"range", "scaled range n^{-d/4} R_n of conditioned tree-indexed walks"},
      {"localtime", "n^{d/2-2} E[L_n(x) L_n(y)] against the limit kernel phi"},
      {"hit", "distant-point hitting probability against 2(4-d)/rho^2"},
      {"brw-identity", "P(a in V^[p]) against 1 - (1 - P(a in R))^p"},
      {"snake", "discretized Brownian snake support volumes"},
      {"verify-all", "the full verification suite"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
    sub->add_option("--workers", opt.workers, "worker threads (overrides TREERANGE_WORKERS and the config)")->check(CLI::PositiveNumber);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--set", opt.set, "extra key=value overrides");
  }

  CLI11_PARSE(app, argc, argv);
  const auto* chosen = app.get_subcommands().front();
  try {
    return execute(*treerange::parse_kind(chosen->get_name()), opt);
  } catch (const treerange::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
