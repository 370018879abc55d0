#pragma once

// Monte Carlo benchmarking: repeated seeded runs per arm, per-iteration
// statistics of the best-so-far objective, and a grid-search oracle for the
// true minimum of low-dimensional test functions.

#include "gmrs/driver.hpp"
#include "gmrs/serialize.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace gmrs {

struct GridMinimum {
  Vec x;
  double f = 0;
};

/// Exhaustive grid over the box (grid_per_dim points per axis, endpoints
/// included) followed by pattern-search refinement of the best node.
GridMinimum brute_force_min(const TestFunction& fn, std::size_t grid_per_dim = 2001);

struct McArm {
  std::string label;
  GmrsConfig config;  // mode and seed are overridden per run
};

struct McConfig {
  std::string function = "adjiman";
  Mode mode = Mode::blackbox;
  std::vector<McArm> arms;
  std::size_t n_runs = 100;
  std::uint64_t seed_base = 0;
  std::size_t threads = 0;  // 0: hardware concurrency
  double oracle_noise = 0;  // preference mode only

  void validate() const;
};

struct ArmSummary {
  std::string label;
  std::vector<double> median;
  std::vector<double> min;
  std::vector<double> max;
  /// Final best-so-far value of every successful run, in seed order.
  std::vector<double> finals;
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;  // "seed N: message"
};

struct McSummary {
  std::string function;
  std::vector<ArmSummary> arms;
};

McSummary run_monte_carlo(const McConfig& cfg);

/// CSV with header arm,iter,median,min,max; rows grouped by arm in config
/// order, iterations ascending from 1.
void write_curves(std::ostream& out, const McSummary& summary);
void emit_curves(const McSummary& summary, const std::string& path);

/// {function, mode, n_runs, seed_base, threads, oracle_noise,
///  arms: [{label, config: {...}}]}; see docs/mc-config.md.
McConfig mc_config_from_json(const Json& j);
Json to_json(const McConfig& cfg);

}  // namespace gmrs
