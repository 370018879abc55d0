// Command-line front end: single runs, Monte Carlo benchmarks, the session
// server and the grid-search minimum of a test function.

#include "gmrs/bench.hpp"
#include "gmrs/driver.hpp"
#include "gmrs/serialize.hpp"
#include "gmrs/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw gmrs::Error(gmrs::ErrorCode::validation, "bad number '" + item + "' in list");
    }
    out.push_back(v);
  }
  return out;
}

gmrs::Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gmrs::Error(gmrs::ErrorCode::io, "cannot open '" + path + "'");
  try {
    return gmrs::Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw gmrs::Error(gmrs::ErrorCode::validation, path + ": " + e.what());
  }
}

struct RunOptions {
  std::string mode = "blackbox";
  std::string function = "adjiman";
  std::string surrogate = "rbf";
  std::string explore = "idw";
  std::string acquisition = "gmrs";
  std::optional<std::size_t> n_init;
  std::size_t n_max = 70;
  std::uint64_t seed = 0;
  std::string delta_cycle = "0.95,0.7,0.35,0";
  std::size_t recalibrate_every = 0;
  double oracle_noise = 0;
  std::string config;
  std::string out = "-";
};

int run(const RunOptions& o) {
  const gmrs::TestFunction fn = gmrs::make_test_function(o.function);
  gmrs::GmrsConfig cfg = o.config.empty() ? gmrs::GmrsConfig{}
                                          : gmrs::config_from_json(read_json_file(o.config));
  cfg.mode = gmrs::parse_mode(o.mode);
  cfg.surrogate = gmrs::parse_surrogate_kind(o.surrogate);
  cfg.explore = gmrs::parse_explore_variant(o.explore);
  cfg.acquisition = gmrs::parse_acquisition_kind(o.acquisition);
  cfg.n_init = o.n_init.value_or(cfg.mode == gmrs::Mode::preference ? 8 : 4);
  cfg.n_max = o.n_max;
  cfg.seed = o.seed;
  cfg.delta_cycle = parse_list(o.delta_cycle);
  cfg.recalibrate_every = o.recalibrate_every;

  const gmrs::Evaluator ev = cfg.mode == gmrs::Mode::blackbox
                                 ? gmrs::Evaluator::blackbox(fn.evaluate)
                                 : gmrs::Evaluator::preference({fn.evaluate, o.oracle_noise});
  const gmrs::RunResult result = gmrs::gmrs_run(cfg, fn.box, ev);

  if (o.out == "-") {
    gmrs::write_history_csv(std::cout, result.history, fn.dim);
  } else {
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw gmrs::Error(gmrs::ErrorCode::io, "cannot open '" + o.out + "'");
    gmrs::write_history_csv(out, result.history, fn.dim);
    if (!out.flush()) throw gmrs::Error(gmrs::ErrorCode::io, "failed writing '" + o.out + "'");
  }
  std::fprintf(stderr, "best f = %.10g at [", result.f_best.value_or(NAN));
  for (Eigen::Index d = 0; d < result.x_best.size(); ++d) {
    std::fprintf(stderr, "%s%.10g", d ? ", " : "", result.x_best[d]);
  }
  std::fprintf(stderr, "]\n");
  return 0;
}

int bench(const std::string& config, const std::string& out, std::size_t threads) {
  gmrs::McConfig cfg = gmrs::mc_config_from_json(read_json_file(config));
  if (threads) cfg.threads = threads;
  const gmrs::McSummary summary = gmrs::run_monte_carlo(cfg);
  gmrs::emit_curves(summary, out);
  int failed = 0;
  for (const auto& arm : summary.arms) {
    std::fprintf(stderr, "%s: %zu runs, %zu failed", arm.label.c_str(), arm.runs,
                 arm.failures);
    if (!arm.median.empty()) std::fprintf(stderr, ", final median %.10g", arm.median.back());
    std::fprintf(stderr, "\n");
    for (const auto& m : arm.failure_messages) std::fprintf(stderr, "  %s\n", m.c_str());
    failed += arm.failures ? 1 : 0;
  }
  return failed ? 3 : 0;
}

int serve(const std::string& host, int port, const std::string& dir) {
  gmrs::SessionService service(dir);
  httplib::Server server;
  gmrs::register_routes(server, service);
  std::fprintf(stderr, "serving %zu stored sessions from %s on http://%s:%d\n",
               service.ids().size(), dir.c_str(), host.c_str(), port);
  if (!server.listen(host, port)) {
    std::fprintf(stderr, "cannot listen on %s:%d\n", host.c_str(), port);
    return 1;
  }
  return 0;
}

int minimum(const std::string& function, std::size_t grid) {
  const gmrs::TestFunction fn = gmrs::make_test_function(function);
  const gmrs::GridMinimum m = gmrs::brute_force_min(fn, grid);
  std::printf("f* = %.15g at [", m.f);
  for (Eigen::Index d = 0; d < m.x.size(); ++d) std::printf("%s%.15g", d ? ", " : "", m.x[d]);
  std::printf("]\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-based global optimization from measurements or preferences"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run_cmd = app.add_subcommand("run", "Optimize a test function and write the history CSV");
  run_cmd->add_option("--mode", ro.mode, "blackbox or preference")
      ->check(CLI::IsMember({"blackbox", "preference"}));
  run_cmd->add_option("--function", ro.function, "Test function name");
  run_cmd->add_option("--surrogate", ro.surrogate, "rbf or gp")
      ->check(CLI::IsMember({"rbf", "gp"}));
  run_cmd->add_option("--explore", ro.explore, "idw, msrs or gpstd");
  run_cmd->add_option("--acquisition", ro.acquisition, "gmrs, fixed-alpha or glisp-like");
  run_cmd->add_option("--n-init", ro.n_init, "Initial samples (default 4, or 8 for preference)");
  run_cmd->add_option("--n-max", ro.n_max, "Total sample budget");
  run_cmd->add_option("--seed", ro.seed, "Random seed");
  run_cmd->add_option("--delta-cycle", ro.delta_cycle, "Comma-separated trade-off cycle");
  run_cmd->add_option("--recalibrate-every", ro.recalibrate_every,
                      "Hyperparameter grid search period (0 disables)");
  run_cmd->add_option("--oracle-noise", ro.oracle_noise, "Preference oracle noise std");
  run_cmd->add_option("--config", ro.config, "JSON config providing the remaining settings");
  run_cmd->add_option("--out", ro.out, "History CSV path ('-' for stdout)");

  std::string bench_config, bench_out = "curves.csv";
  std::size_t bench_threads = 0;
  auto* bench_cmd = app.add_subcommand("bench", "Monte Carlo benchmark from a JSON config");
  bench_cmd->add_option("--config", bench_config, "mc.json")->required();
  bench_cmd->add_option("--out", bench_out, "Curves CSV path");
  bench_cmd->add_option("--threads", bench_threads, "Worker threads (overrides config)");

  std::string host = "127.0.0.1", data_dir = "sessions";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP server for interactive preference sessions");
  serve_cmd->add_option("--host", host, "Listen address");
  serve_cmd->add_option("--port", port, "Listen port");
  serve_cmd->add_option("--data-dir", data_dir, "Directory holding one JSON file per session");

  std::string min_function = "adjiman";
  std::size_t grid = 2001;
  auto* min_cmd = app.add_subcommand("minimum", "Grid-search minimum of a test function");
  min_cmd->add_option("--function", min_function, "Test function name");
  min_cmd->add_option("--grid", grid, "Grid points per axis");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(ro);
    if (*bench_cmd) return bench(bench_config, bench_out, bench_threads);
    if (*serve_cmd) return serve(host, port, data_dir);
    if (*min_cmd) return minimum(min_function, grid);
  } catch (const gmrs::Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", gmrs::to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
