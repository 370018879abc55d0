#include "gmrs/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

namespace gmrs {

GridMinimum brute_force_min(const TestFunction& fn, std::size_t grid_per_dim) {
  const Eigen::Index dim = fn.box.dim();
  if (dim < 1 || dim > 3) {
    throw Error(ErrorCode::invalid_argument, "grid search supports 1 to 3 dimensions");
  }
  if (grid_per_dim < 101) {
    throw Error(ErrorCode::invalid_argument, "grid needs at least 101 points per axis");
  }
  const double last = static_cast<double>(grid_per_dim - 1);
  std::size_t total = 1;
  for (Eigen::Index d = 0; d < dim; ++d) total *= grid_per_dim;

  GridMinimum best{Vec(), std::numeric_limits<double>::infinity()};
  Vec u(dim);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rest = k;
    for (Eigen::Index d = 0; d < dim; ++d) {
      u[d] = static_cast<double>(rest % grid_per_dim) / last;
      rest /= grid_per_dim;
    }
    const Vec x = fn.box.from_unit(u);
    const double f = fn.evaluate(x);
    if (f < best.f) best = {x, f};
  }

  InnerSolverSettings refine;
  refine.initial_step = 1.0 / last;
  refine.min_step = 1e-12;
  refine.max_evaluations = 100000;
  auto [x, f] = compass_search(fn.evaluate, fn.box, best.x, best.f, refine);
  return {std::move(x), f};
}

// ---------------------------------------------------------------------------

void McConfig::validate() const {
  if (n_runs < 1) throw Error(ErrorCode::validation, "n_runs must be at least 1");
  if (arms.empty()) throw Error(ErrorCode::validation, "at least one arm is required");
  if (!(oracle_noise >= 0)) throw Error(ErrorCode::validation, "oracle_noise must be >= 0");
  for (const auto& arm : arms) {
    GmrsConfig c = arm.config;
    c.mode = mode;
    c.validate();
  }
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct RunOutcome {
  bool ok = false;
  std::vector<double> curve;
  std::string error;
};

}  // namespace

McSummary run_monte_carlo(const McConfig& cfg) {
  cfg.validate();
  const TestFunction fn = make_test_function(cfg.function);
  const std::size_t n_arms = cfg.arms.size();
  const std::size_t jobs = n_arms * cfg.n_runs;
  std::vector<RunOutcome> outcomes(jobs);

  auto run_one = [&](std::size_t job) {
    const McArm& arm = cfg.arms[job / cfg.n_runs];
    const std::size_t r = job % cfg.n_runs;
    GmrsConfig c = arm.config;
    c.mode = cfg.mode;
    c.seed = cfg.seed_base + r;
    RunOutcome& out = outcomes[job];
    try {
      const Evaluator ev = cfg.mode == Mode::blackbox
                               ? Evaluator::blackbox(fn.evaluate)
                               : Evaluator::preference({fn.evaluate, cfg.oracle_noise});
      out.curve = gmrs_run(c, fn.box, ev).best_curve;
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  };

  std::size_t threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < jobs;) run_one(job);
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  McSummary summary;
  summary.function = cfg.function;
  for (std::size_t a = 0; a < n_arms; ++a) {
    ArmSummary arm;
    arm.label = cfg.arms[a].label;
    arm.runs = cfg.n_runs;
    std::vector<const std::vector<double>*> curves;
    for (std::size_t r = 0; r < cfg.n_runs; ++r) {
      const RunOutcome& o = outcomes[a * cfg.n_runs + r];
      if (o.ok) {
        curves.push_back(&o.curve);
        arm.finals.push_back(o.curve.empty() ? std::numeric_limits<double>::quiet_NaN()
                                             : o.curve.back());
      } else {
        ++arm.failures;
        arm.failure_messages.push_back("seed " + std::to_string(cfg.seed_base + r) +
                                       ": " + o.error);
      }
    }
    const std::size_t len = curves.empty() ? 0 : curves.front()->size();
    for (std::size_t i = 0; i < len; ++i) {
      std::vector<double> column;
      for (const auto* c : curves) column.push_back((*c)[i]);
      arm.median.push_back(median_of(column));
      arm.min.push_back(*std::min_element(column.begin(), column.end()));
      arm.max.push_back(*std::max_element(column.begin(), column.end()));
    }
    summary.arms.push_back(std::move(arm));
  }
  return summary;
}

// ---------------------------------------------------------------------------

void write_curves(std::ostream& out, const McSummary& summary) {
  out << "arm,iter,median,min,max\n";
  char buf[128];
  for (const auto& arm : summary.arms) {
    for (std::size_t i = 0; i < arm.median.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g,%.17g\n", i + 1, arm.median[i],
                    arm.min[i], arm.max[i]);
      out << arm.label << buf;
    }
  }
}

void emit_curves(const McSummary& summary, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
  write_curves(out, summary);
  out.flush();
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------

McConfig mc_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::validation, "mc config must be an object");
  for (const auto& [k, v] : j.items()) {
    static const std::vector<std::string> keys{"function", "mode",    "n_runs", "seed_base",
                                               "threads",  "arms",    "oracle_noise"};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw Error(ErrorCode::validation, "unknown key '" + k + "' in mc config");
    }
  }
  McConfig cfg;
  try {
    cfg.function = j.value("function", cfg.function);
    cfg.mode = parse_mode(j.value("mode", std::string(to_string(cfg.mode))));
    cfg.n_runs = j.value("n_runs", cfg.n_runs);
    cfg.seed_base = j.value("seed_base", cfg.seed_base);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.oracle_noise = j.value("oracle_noise", cfg.oracle_noise);
    for (const auto& a : j.at("arms")) {
      McArm arm;
      arm.label = a.at("label").get<std::string>();
      Json c = a.value("config", Json::object());
      c["mode"] = to_string(cfg.mode);
      arm.config = config_from_json(c);
      cfg.arms.push_back(std::move(arm));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::validation, std::string("malformed mc config: ") + e.what());
  }
  make_test_function(cfg.function);
  cfg.validate();
  return cfg;
}

Json to_json(const McConfig& cfg) {
  Json arms = Json::array();
  for (const auto& a : cfg.arms) arms.push_back({{"label", a.label}, {"config", to_json(a.config)}});
  return Json{{"function", cfg.function},   {"mode", to_string(cfg.mode)},
              {"n_runs", cfg.n_runs},       {"seed_base", cfg.seed_base},
              {"threads", cfg.threads},     {"oracle_noise", cfg.oracle_noise},
              {"arms", arms}};
}

}  // namespace gmrs
