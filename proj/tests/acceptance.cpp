// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are fixed here and never adapted to the results.

#include "gmrs/bench.hpp"
#include "gmrs/driver.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>

using namespace gmrs;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail, double seconds) {
  std::printf("%s  %-28s %s (%.1fs)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(),
              seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <typename Check>
void run(const std::string& name, Check&& check) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    ok = check(detail);
  } catch (const std::exception& e) {
    detail = std::string("threw: ") + e.what();
  }
  const double s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(ok, name, detail, s);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Mat uniform_points(std::mt19937_64& rng, int n, int dim) {
  std::uniform_real_distribution<double> u(0, 1);
  Mat X(n, dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) X(i, d) = u(rng);
  return X;
}

// Uniform points with a minimum pairwise separation (rejection sampling).
Mat separated_points(std::mt19937_64& rng, int n, int dim, double min_sep) {
  std::uniform_real_distribution<double> u(0, 1);
  Mat X(n, dim);
  int filled = 0;
  for (int attempt = 0; filled < n; ++attempt) {
    if (attempt > 100000) throw std::runtime_error("cannot place separated points");
    Vec x(dim);
    for (int d = 0; d < dim; ++d) x[d] = u(rng);
    bool far = true;
    for (int i = 0; i < filled && far; ++i) far = (X.row(i).transpose() - x).norm() >= min_sep;
    if (far) X.row(filled++) = x.transpose();
  }
  return X;
}

std::vector<Vec> rows(const Mat& X) {
  std::vector<Vec> out;
  for (Eigen::Index i = 0; i < X.rows(); ++i) out.push_back(X.row(i).transpose());
  return out;
}

double fraction_within(const std::vector<double>& v, double target, double tol) {
  const auto n = std::count_if(v.begin(), v.end(),
                               [&](double x) { return std::abs(x - target) <= tol; });
  return v.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

McConfig adjiman_mc(Mode mode) {
  McConfig mc;
  mc.function = "adjiman";
  mc.mode = mode;
  mc.n_runs = 100;
  GmrsConfig g;
  g.mode = mode;
  g.surrogate = SurrogateKind::rbf;
  g.explore = ExploreVariant::idw;
  g.n_init = mode == Mode::blackbox ? 4 : 8;
  g.n_max = 70;
  g.delta_cycle = {0.95, 0.7, 0.35, 0.0};
  mc.arms.push_back({"gmrs", g});
  return mc;
}

std::string history_csv(const GmrsConfig& cfg, const TestFunction& fn) {
  auto e = cfg.mode == Mode::blackbox ? Evaluator::blackbox(fn.evaluate)
                                      : Evaluator::preference(PreferenceOracle{fn.evaluate, 0.0});
  e.truth = fn.evaluate;
  std::ostringstream out;
  write_history_csv(out, gmrs_run(cfg, fn.box, e).history, fn.dim);
  return out.str();
}

}  // namespace

int main() {
  const TestFunction adj = make_test_function("adjiman");
  const double f_star = brute_force_min(adj, 2001).f;
  std::printf("reference minimum of adjiman: %.15g\n", f_star);

  run("adjiman black-box", [&](std::string& detail) {
    const auto s = run_monte_carlo(adjiman_mc(Mode::blackbox));
    const auto& a = s.arms.at(0);
    const double med = median(a.finals);
    const double frac = fraction_within(a.finals, f_star, 5e-2);
    detail = fmt("median gap %.3g (<= 1e-2), %.0f%% within 5e-2 (>= 90%%), %zu failed runs",
                 std::abs(med - f_star), 100 * frac, a.failures);
    return a.failures == 0 && a.finals.size() == 100 && std::abs(med - f_star) <= 1e-2 &&
           frac >= 0.9;
  });

  run("adjiman preference", [&](std::string& detail) {
    const auto s = run_monte_carlo(adjiman_mc(Mode::preference));
    const auto& a = s.arms.at(0);
    const double frac = fraction_within(a.finals, f_star, 5e-2);
    detail = fmt("%.0f%% of runs within 5e-2 (>= 95%%), %zu failed runs", 100 * frac, a.failures);
    return a.failures == 0 && a.finals.size() == 100 && frac >= 0.95;
  });

  run("rbf interpolation", [&](std::string& detail) {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> dim_d(1, 3), n_d(1, 20);
    // Default kernel on unit-box data, as the optimizer fits it.
    double worst = 0, worst_conditioned = 0;
    int ridged = 0;
    for (int t = 0; t < 50; ++t) {
      const int dim = dim_d(rng), n = n_d(rng);
      const Mat X = uniform_points(rng, n, dim);
      const Vec y = uniform_points(rng, n, 1).col(0) * 4.0 - Vec::Constant(n, 2.0);
      const auto fit = fit_interpolant(RadialKernel<double>{}, X, y);
      double res = 0;
      for (int i = 0; i < n; ++i) {
        res = std::max(res, std::abs(fit.surrogate(Vec(X.row(i).transpose())) - y[i]));
      }
      worst = std::max(worst, res);
      if (fit.ridge > 0) {
        ++ridged;
      } else {
        worst_conditioned = std::max(worst_conditioned, res);
      }
    }
    detail = fmt("max training residual %.3g (<= 1e-7); %d/50 ridge-stabilized, "
                 "max %.3g on the rest",
                 worst, ridged, worst_conditioned);
    return worst <= 1e-7;
  });

  run("preference qp", [&](std::string& detail) {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> dim_d(1, 3), n_d(3, 20);
    PreferenceFitConfig<double> cfg;
    double worst_kkt = 0;
    std::size_t checked = 0, mismatched = 0;
    for (int t = 0; t < 50; ++t) {
      const int dim = dim_d(rng), n = n_d(rng);
      const Mat X = uniform_points(rng, n, dim);
      const Vec w = uniform_points(rng, dim, 1).col(0);
      // Preferences induced by a latent cost are separable by construction.
      auto latent = [&](int i) {
        const Vec x = X.row(i).transpose();
        return std::sin(5 * x.dot(w)) + (x.array() - 0.4).square().sum();
      };
      std::uniform_int_distribution<int> pick(0, n - 1);
      std::vector<int> b;
      std::vector<std::pair<std::size_t, std::size_t>> map;
      for (int h = 0; h < 2 * n; ++h) {
        const int i = pick(rng), j = pick(rng);
        if (i == j) continue;
        b.push_back(preference_from_values(latent(i), latent(j)));
        map.emplace_back(i, j);
      }
      if (b.empty()) continue;
      const auto fit = fit_preference_rbf(RadialKernel<double>{}, X, b, map, cfg);
      worst_kkt = std::max(worst_kkt, fit.kkt.max());
      for (std::size_t h = 0; h < b.size(); ++h) {
        // Margins are tightened by σ·kPreferenceMarginShift while solving, so
        // slacks up to that size still reproduce b_h.
        if (fit.slacks[static_cast<Eigen::Index>(h)] > cfg.sigma * kPreferenceMarginShift) continue;
        ++checked;
        const Vec xi = X.row(static_cast<Eigen::Index>(map[h].first)).transpose();
        const Vec xj = X.row(static_cast<Eigen::Index>(map[h].second)).transpose();
        if (surrogate_preference(fit.surrogate, xi, xj, cfg.sigma) != b[h]) ++mismatched;
      }
    }
    detail = fmt("max KKT residual %.3g (<= 1e-6), %zu/%zu zero-slack preferences mismatched",
                 worst_kkt, mismatched, checked);
    return worst_kkt <= 1e-6 && mismatched == 0 && checked > 0;
  });

  run("gp correctness", [&](std::string& detail) {
    std::mt19937_64 rng(303);
    double worst_dense = 0;
    for (int t = 0; t < 20; ++t) {
      const int dim = 1 + t % 3, n = dim == 1 ? 3 + t % 3 : 3 + t % 8;
      const double noise = (t % 2) ? 1e-2 : 0.0;
      const Mat X = separated_points(rng, n, dim, 0.15);
      const Vec y = uniform_points(rng, n, 1).col(0);
      SquaredExponential<double> k{1.0 + 0.1 * (t % 4), 0.2 + 0.05 * (t % 4)};
      const auto m = gp_fit_blackbox(k, X, y, noise);
      for (int s = 0; s < 5; ++s) {
        const Vec x = uniform_points(rng, 1, dim).row(0).transpose();
        const auto ref = oracle::gp_posterior(rows(X), y, k.signal_var, k.lengthscale, noise, x);
        const auto p = m.predict(x);
        worst_dense = std::max({worst_dense, std::abs(p.mean - ref.mean),
                                std::abs(p.raw_variance - ref.variance)});
      }
    }

    double worst_grad = 0;
    for (int t = 0; t < 20; ++t) {
      const int n = 4 + t % 10;
      const Mat X = uniform_points(rng, n, 2);
      std::uniform_int_distribution<int> pick(0, n - 1);
      std::vector<StrictPair> pairs;
      while (static_cast<int>(pairs.size()) < n) {
        const int a = pick(rng), b = pick(rng);
        if (a == b) continue;
        const bool a_wins = X(a, 0) + X(a, 1) < X(b, 0) + X(b, 1);
        pairs.push_back(a_wins ? StrictPair{std::size_t(a), std::size_t(b)}
                               : StrictPair{std::size_t(b), std::size_t(a)});
      }
      const auto m = gp_fit_preference(SquaredExponential<double>{1.0, 0.5}, X, pairs, 0.1);
      worst_grad = std::max(worst_grad, m.gradient_norm());
    }

    double worst_fd = 0;
    std::normal_distribution<double> N01;
    for (int t = 0; t < 20; ++t) {
      const int n = 6;
      Mat K = SquaredExponential<double>{1.0, 0.5}.gram(uniform_points(rng, n, 2));
      K.diagonal().array() += 1e-3;  // keeps the explicit solve well-posed
      std::uniform_int_distribution<int> pick(0, n - 1);
      std::vector<StrictPair> pairs;
      while (pairs.size() < 8) {
        const int a = pick(rng), b = pick(rng);
        if (a != b) pairs.push_back({std::size_t(a), std::size_t(b)});
      }
      Vec f(n);
      for (int i = 0; i < n; ++i) f[i] = 0.3 * N01(rng);
      const Vec g = preference_neg_log_posterior_gradient(K, pairs, 0.1, f);
      const Vec fd = oracle::fd_gradient(
          [&](const Vec& v) { return preference_neg_log_posterior(K, pairs, 0.1, v); }, f);
      worst_fd = std::max(worst_fd, (g - fd).norm() / std::max(1.0, fd.norm()));
    }
    detail = fmt("dense-formula gap %.3g (<= 1e-10), MAP gradient %.3g (<= 1e-6), "
                 "finite-difference error %.3g (<= 1e-4)",
                 worst_dense, worst_grad, worst_fd);
    return worst_dense <= 1e-10 && worst_grad <= 1e-6 && worst_fd <= 1e-4;
  });

  run("properness", [&](std::string& detail) {
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<int> dim_d(1, 3), n_d(1, 20);
    std::size_t duplicates = 0, total = 0;
    for (auto variant : {ExploreVariant::idw, ExploreVariant::msrs, ExploreVariant::gp_std}) {
      for (int t = 0; t < 200; ++t) {
        const int dim = dim_d(rng), n = n_d(rng);
        const ConstraintSet box(Vec::Zero(dim), Vec::Ones(dim));
        const Mat X = uniform_points(rng, n, dim);
        const std::vector<Vec> samples = rows(X);
        const GpBlackboxModel<double> gp(SquaredExponential<double>{1.0, 0.5}, X, Vec::Zero(n), 0.0);
        const auto z = variant == ExploreVariant::idw    ? ExplorationFunction<double>::idw(X)
                       : variant == ExploreVariant::msrs ? ExplorationFunction<double>::msrs(X)
                                                         : ExplorationFunction<double>::gp_std(gp);
        Rng solver_rng(rng());
        const auto aug = build_augmented_set(box, samples, AugmentStrategy::random_uniform,
                                             100 * static_cast<std::size_t>(dim), solver_rng);
        RescaleStats<double> s{{0, 1, 1}, rescale_stats<double>(z, aug.points)};
        auto acq = [&](const Vec& x) {
          return acquisition_from_values<double>(0.0, z(x), s, 0.0);
        };
        const Vec x = inner_minimize(acq, box, aug.points, solver_rng);
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& xi : samples) nearest = std::min(nearest, (x - xi).lpNorm<Eigen::Infinity>());
        ++total;
        if (!(nearest > 1e-9)) ++duplicates;
      }
    }
    detail = fmt("%zu/%zu inner solves returned an existing sample", duplicates, total);
    return duplicates == 0;
  });

  run("density", [&](std::string& detail) {
    const ConstraintSet box(Vec::Zero(2), Vec::Ones(2));
    GmrsConfig cfg;
    cfg.delta_cycle = {0.0};
    cfg.n_init = 4;
    cfg.n_max = cfg.n_init + 200;
    cfg.seed = 505;
    auto f = [](const Vec& x) { return (x.array() - 0.3).square().sum(); };
    const auto r = gmrs_run(cfg, box, Evaluator::blackbox(f));
    const auto& all = r.state.dataset.samples();
    const std::vector<Vec> early(all.begin(), all.begin() + static_cast<long>(cfg.n_init + 20));
    const double d20 = oracle::fill_distance_unit_square(early);
    const double d200 = oracle::fill_distance_unit_square(all);
    detail = fmt("fill distance %.4f after 20 iterations, %.4f after 200", d20, d200);
    return d200 < d20;
  });

  run("acquisition identities", [&](std::string& detail) {
    bool ok = true;
    std::vector<Vec> pts{Vec::Constant(1, 0.0), Vec::Constant(1, 1.0)};
    ok &= rescale_stats<double>([](const Vec&) { return 3.0; }, pts).delta == 3.0;
    ok &= rescale_stats<double>([](const Vec&) { return -2.0; }, pts).delta == -2.0;
    ok &= rescale_stats<double>([](const Vec&) { return 0.0; }, pts).delta == 1.0;
    ok &= rescale_stats<double>([](const Vec& x) { return 5 * x[0]; }, pts).delta == 5.0;

    std::mt19937_64 rng(606);
    std::size_t disagree = 0;
    for (int t = 0; t < 50; ++t) {
      const Mat C = uniform_points(rng, 100, 2);
      const std::vector<Vec> cand = rows(C);
      const double a = uniform_points(rng, 1, 1)(0, 0);
      auto f = [&](const Vec& x) { return std::cos(6 * x[0] + a) + x[1] * x[1]; };
      auto z = [&](const Vec& x) { return -std::abs(x[0] - a * x[1]); };
      RescaleStats<double> s{rescale_stats<double>(f, cand), rescale_stats<double>(z, cand)};
      for (double d : {0.25, 0.5, 0.95}) {
        const double alpha = equivalent_alpha(s, d);
        std::size_t i17 = 0, i23 = 0;
        for (std::size_t i = 1; i < cand.size(); ++i) {
          if (acquisition_value(f, z, s, d, cand[i]) < acquisition_value(f, z, s, d, cand[i17])) i17 = i;
          if (f(cand[i]) + alpha * z(cand[i]) < f(cand[i23]) + alpha * z(cand[i23])) i23 = i;
        }
        if (i17 != i23) ++disagree;
      }
    }

    std::size_t trace_errors = 0;
    std::mt19937_64 trng(607);
    std::bernoulli_distribution coin(0.4);
    const std::vector<double> values{0.95, 0.7, 0.35, 0.0};
    for (int t = 0; t < 20; ++t) {
      DeltaCycle c(values);
      std::size_t j = 0;
      for (int k = 0; k < 60; ++k) {
        const bool improved = coin(trng);
        c = cycle_step(c, improved);
        if (!improved) j = (j + 1) % values.size();
        if (c.index() != j || c.delta() != values[j]) ++trace_errors;
      }
    }
    detail = fmt("degenerate rules %s, %zu argmin disagreements, %zu trace errors",
                 ok ? "exact" : "wrong", disagree, trace_errors);
    return ok && disagree == 0 && trace_errors == 0;
  });

  run("determinism", [&](std::string& detail) {
    GmrsConfig bb;
    bb.seed = 77;
    GmrsConfig pr;
    pr.mode = Mode::preference;
    pr.n_init = 8;
    pr.seed = 77;
    const bool same_bb = history_csv(bb, adj) == history_csv(bb, adj);
    const bool same_pr = history_csv(pr, adj) == history_csv(pr, adj);
    detail = fmt("black-box %s, preference %s", same_bb ? "identical" : "differs",
                 same_pr ? "identical" : "differs");
    return same_bb && same_pr;
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
