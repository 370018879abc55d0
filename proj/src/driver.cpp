#include "gmrs/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace gmrs {

const char* to_string(SurrogateKind k) noexcept {
  return k == SurrogateKind::rbf ? "rbf" : "gp";
}

SurrogateKind parse_surrogate_kind(const std::string& s) {
  if (s == "rbf") return SurrogateKind::rbf;
  if (s == "gp") return SurrogateKind::gp;
  throw Error(ErrorCode::invalid_argument, "unknown surrogate '" + s + "'");
}

const char* to_string(Phase p) noexcept {
  switch (p) {
    case Phase::initial: return "initial";
    case Phase::loop: return "loop";
    case Phase::finished: return "finished";
  }
  return "unknown";
}

Phase parse_phase(const std::string& s) {
  if (s == "initial") return Phase::initial;
  if (s == "loop") return Phase::loop;
  if (s == "finished") return Phase::finished;
  throw Error(ErrorCode::invalid_argument, "unknown phase '" + s + "'");
}

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::validation, what);
}

Mat unit_samples(const Dataset& data, const ConstraintSet& omega) {
  Mat X(static_cast<Eigen::Index>(data.size()), omega.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = omega.to_unit(data.sample(i)).transpose();
  }
  return X;
}

Vec measures_vector(const Dataset& data) {
  return Eigen::Map<const Vec>(data.measures().data(),
                               static_cast<Eigen::Index>(data.measures().size()));
}

std::vector<std::pair<std::size_t, std::size_t>> index_pairs(const Dataset& data) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(data.mapping().size());
  for (const auto& p : data.mapping()) out.emplace_back(p.left, p.right);
  return out;
}

Vec uniform_in_box(const ConstraintSet& omega, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec u(omega.dim());
  for (Eigen::Index d = 0; d < u.size(); ++d) u[d] = unit(rng);
  return omega.from_unit(u);
}

double unit_distance_to_samples(const Dataset& data, const ConstraintSet& omega,
                                const Vec& x) {
  const Vec u = omega.to_unit(x);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : data.samples()) {
    best = std::min(best, (omega.to_unit(s) - u).norm());
  }
  return best;
}

// Duplicate candidate: take the feasible draw (out of 100) farthest from X.
Vec spread_perturbation(const Dataset& data, const ConstraintSet& omega, Rng& rng) {
  Vec best_x;
  double best_d = -1.0;
  std::size_t feasible = 0;
  for (std::size_t draw = 0; feasible < 100 && draw < 10000; ++draw) {
    Vec x = uniform_in_box(omega, rng);
    if (!omega.contains(x)) continue;
    ++feasible;
    const double d = unit_distance_to_samples(data, omega, x);
    if (d > best_d) {
      best_d = d;
      best_x = std::move(x);
    }
  }
  if (best_d <= 0.0 || data.is_duplicate(best_x)) {
    throw Error(ErrorCode::infeasible,
                "could not find a feasible non-duplicate replacement sample");
  }
  return best_x;
}

}  // namespace

void GmrsConfig::validate() const {
  if (n_init < 1) invalid("n_init must be at least 1");
  if (mode == Mode::preference && n_init < 2) {
    invalid("preference mode needs n_init >= 2");
  }
  if (n_max < n_init) invalid("n_max must be at least n_init");
  try {
    DeltaCycle check(delta_cycle);
  } catch (const Error& e) {
    invalid(e.what());
  }
  if (!(rbf.shape > 0.0)) invalid("rbf.shape must be positive");
  if (!(rbf.sigma > 0.0)) invalid("rbf.sigma must be positive");
  if (!(rbf.lambda > 0.0)) invalid("rbf.lambda must be positive");
  if (!(gp.signal_var > 0.0)) invalid("gp.signal_var must be positive");
  if (!(gp.lengthscale > 0.0)) invalid("gp.lengthscale must be positive");
  if (gp.noise && !(*gp.noise >= 0.0)) invalid("gp.noise must be >= 0");
  if (mode == Mode::preference && surrogate == SurrogateKind::gp &&
      !(gp.noise_std(mode) > 0.0)) {
    invalid("preference GP needs gp.noise > 0");
  }
  for (double v : rbf.shape_grid) {
    if (!(v > 0.0)) invalid("rbf.shape_grid entries must be positive");
  }
  for (double v : gp.lengthscale_grid) {
    if (!(v > 0.0)) invalid("gp.lengthscale_grid entries must be positive");
  }
  if (!std::isfinite(alpha)) invalid("alpha must be finite");
  if (naug == 1) invalid("acq.naug must be at least 2");
  if (inner.starts < 1 || inner.contraction <= 0.0 || inner.contraction >= 1.0 ||
      !(inner.min_step > 0.0) || !(inner.initial_step > inner.min_step)) {
    invalid("invalid inner solver settings");
  }
}

// ---------------------------------------------------------------------------

std::vector<Vec> lhd_design(const ConstraintSet& omega, std::size_t n, Rng& rng) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "LHD needs N >= 1");
  const Eigen::Index dim = omega.dim();
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<std::size_t>> strata(static_cast<std::size_t>(dim));
  for (auto& perm : strata) {
    perm.resize(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
  }
  auto draw = [&](std::size_t i) {
    Vec u(dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
      u[d] = (static_cast<double>(strata[static_cast<std::size_t>(d)][i]) + unit(rng)) /
             static_cast<double>(n);
    }
    return omega.from_unit(u.cwiseMin(1.0));
  };

  std::vector<Vec> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec x = draw(i);
    int attempts = 0;
    while (!omega.satisfies_non_bound(x)) {
      // Strata that cannot meet the constraints: give up stratification for
      // this point and sample the feasible set uniformly.
      if (++attempts > 100) {
        x = uniform_in_box(omega, rng);
        if (attempts > 100 + 10000) {
          throw Error(ErrorCode::infeasible,
                      "no feasible point found for the initial design");
        }
      } else {
        x = draw(i);
      }
    }
    points.push_back(std::move(x));
  }
  return points;
}

std::pair<Vec, double> compass_search(const std::function<double(const Vec&)>& f,
                                      const ConstraintSet& omega, Vec x, double fx,
                                      const InnerSolverSettings& settings) {
  const Vec width = omega.width();
  auto value = [&](const Vec& p) {
    return omega.contains(p) ? f(p) : std::numeric_limits<double>::infinity();
  };
  double step = settings.initial_step;
  std::size_t evals = 0;
  while (step >= settings.min_step && evals < settings.max_evaluations) {
    bool moved = false;
    for (Eigen::Index d = 0; d < x.size() && !moved; ++d) {
      for (double sign : {1.0, -1.0}) {
        Vec trial = x;
        trial[d] = std::clamp(trial[d] + sign * step * width[d], omega.lower()[d],
                              omega.upper()[d]);
        if (trial[d] == x[d]) continue;
        const double v = value(trial);
        ++evals;
        if (v < fx) {
          x = std::move(trial);
          fx = v;
          moved = true;
          break;
        }
      }
    }
    if (!moved) step *= settings.contraction;
  }
  return {std::move(x), fx};
}

Vec inner_minimize(const std::function<double(const Vec&)>& acq,
                   const ConstraintSet& omega, const std::vector<Vec>& x_aug,
                   Rng& rng, const InnerSolverSettings& settings) {
  const Eigen::Index dim = omega.dim();
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto value = [&](const Vec& x) { return omega.contains(x) ? acq(x) : inf; };

  std::vector<Vec> candidates = x_aug;
  const std::size_t n_random = settings.random_per_dim * static_cast<std::size_t>(dim);
  for (std::size_t i = 0; i < n_random; ++i) candidates.push_back(uniform_in_box(omega, rng));

  std::vector<double> values(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) values[i] = value(candidates[i]);

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  Vec best_x = candidates.empty() ? omega.clamp(omega.from_unit(Vec::Constant(dim, 0.5)))
                                  : candidates[order.front()];
  double best_v = candidates.empty() ? value(best_x) : values[order.front()];

  const std::size_t starts = std::min(settings.starts, order.size());
  for (std::size_t s = 0; s < starts; ++s) {
    if (!std::isfinite(values[order[s]])) break;
    auto [x, fx] = compass_search(acq, omega, candidates[order[s]], values[order[s]],
                                  settings);
    if (fx < best_v) {
      best_v = fx;
      best_x = std::move(x);
    }
  }
  return best_x;
}

// ---------------------------------------------------------------------------

double FittedSurrogate::operator()(const Vec& u) const {
  return std::visit([&](const auto& m) { return m(u); }, *model_);
}

std::optional<PredictiveDistribution<double>> FittedSurrogate::predict(
    const Vec& u) const {
  if (const auto* m = std::get_if<GpBlackboxModel<double>>(model_.get())) {
    return m->predict(u);
  }
  if (const auto* m = std::get_if<GpPreferenceModel<double>>(model_.get())) {
    return m->predict(u);
  }
  return std::nullopt;
}

namespace {

FittedSurrogate fit_with(const Dataset& data, const GmrsConfig& cfg,
                         const ConstraintSet& omega, const Hyperparameters& hyper) {
  const Mat X = unit_samples(data, omega);
  if (data.mode() == Mode::blackbox) {
    const Vec y = measures_vector(data);
    if (cfg.surrogate == SurrogateKind::rbf) {
      RadialKernel<double> kernel{cfg.rbf.family, hyper.rbf_shape};
      return FittedSurrogate(fit_interpolant(kernel, X, y).surrogate);
    }
    SquaredExponential<double> kernel{cfg.gp.signal_var, hyper.gp_lengthscale};
    const double s = cfg.gp.noise_std(Mode::blackbox);
    return FittedSurrogate(GpBlackboxModel<double>(kernel, X, y, s * s));
  }
  if (cfg.surrogate == SurrogateKind::rbf) {
    RadialKernel<double> kernel{cfg.rbf.family, hyper.rbf_shape};
    PreferenceFitConfig<double> pcfg;
    pcfg.sigma = cfg.rbf.sigma;
    pcfg.lambda = cfg.rbf.lambda;
    return FittedSurrogate(
        fit_preference_rbf(kernel, X, data.preferences(), index_pairs(data), pcfg)
            .surrogate);
  }
  SquaredExponential<double> kernel{cfg.gp.signal_var, hyper.gp_lengthscale};
  return FittedSurrogate(GpPreferenceModel<double>(
      kernel, X, strict_pairs(data.preferences(), index_pairs(data)),
      cfg.gp.noise_std(Mode::preference)));
}

}  // namespace

FittedSurrogate fit_surrogate(const SessionState& state, const GmrsConfig& cfg,
                              const ConstraintSet& omega) {
  return fit_with(state.dataset, cfg, omega, state.hyper);
}

// ---------------------------------------------------------------------------

Evaluator Evaluator::blackbox(std::function<double(const Vec&)> f) {
  Evaluator e;
  e.measure = f;
  e.truth = std::move(f);
  return e;
}

Evaluator Evaluator::preference(PreferenceOracle oracle) {
  Evaluator e;
  e.truth = oracle.latent;
  e.compare = [oracle = std::move(oracle)](const Vec& a, const Vec& b, Rng& rng) {
    return oracle.compare(a, b, rng);
  };
  return e;
}

SessionState initialize_session(const GmrsConfig& cfg, const ConstraintSet& omega,
                                const std::function<double(const Vec&)>& measure) {
  cfg.validate();
  SessionState state(Dataset(cfg.mode, omega.width()));
  state.rng.seed(cfg.seed);
  state.cycle = DeltaCycle(cfg.delta_cycle);
  state.hyper = {cfg.rbf.shape, cfg.gp.lengthscale};

  const auto design = lhd_design(omega, cfg.n_init, state.rng);
  if (cfg.mode == Mode::blackbox) {
    if (!measure) {
      throw Error(ErrorCode::invalid_argument,
                  "black-box initialization needs a measurement function");
    }
    for (const auto& x : design) {
      const double y = measure(x);
      const std::size_t i = state.dataset.add_measured(x, y);
      if (!state.y_best || y < *state.y_best) {
        state.y_best = y;
        state.best = i;
      }
    }
    state.phase = state.dataset.size() < cfg.n_max ? Phase::loop : Phase::finished;
  } else {
    for (const auto& x : design) state.dataset.add_sample(x);
    state.phase = Phase::initial;
    state.init_cursor = 1;
  }
  return state;
}

const PendingQuery& propose(SessionState& state, const GmrsConfig& cfg,
                            const ConstraintSet& omega) {
  if (state.phase != Phase::loop) {
    throw Error(ErrorCode::conflict, "the session is not in its main loop");
  }
  if (state.pending) {
    throw Error(ErrorCode::conflict, "a query is already pending");
  }
  if (state.dataset.size() >= cfg.n_max) {
    throw Error(ErrorCode::conflict, "the evaluation budget is exhausted");
  }
  const std::size_t k = state.iteration + 1;
  if (cfg.recalibrate_every > 0 && k % cfg.recalibrate_every == 0) {
    state.hyper = recalibrate(state, cfg, omega);
  }

  const FittedSurrogate fhat = fit_surrogate(state, cfg, omega);
  const Mat X = unit_samples(state.dataset, omega);

  std::optional<GpBlackboxModel<double>> spread_model;
  auto make_explore = [&](ExploreVariant v) {
    switch (v) {
      case ExploreVariant::idw: return ExplorationFunction<double>::idw(X);
      case ExploreVariant::msrs: return ExplorationFunction<double>::msrs(X);
      case ExploreVariant::gp_std: break;
    }
    if (const auto* m = std::get_if<GpBlackboxModel<double>>(&fhat.model())) {
      return ExplorationFunction<double>::gp_std(*m);
    }
    if (const auto* m = std::get_if<GpPreferenceModel<double>>(&fhat.model())) {
      return ExplorationFunction<double>::gp_std(*m);
    }
    // RBF surrogate: the variance of a GP on the same inputs does not depend
    // on the targets, so a zero-target model supplies it.
    if (!spread_model) {
      const double s = cfg.gp.noise.value_or(0.0);
      spread_model.emplace(
          SquaredExponential<double>{cfg.gp.signal_var, state.hyper.gp_lengthscale},
          X, Vec::Zero(X.rows()), s * s);
    }
    return ExplorationFunction<double>::gp_std(*spread_model);
  };

  const AugmentedSet x_aug =
      build_augmented_set(omega, state.dataset.samples(), cfg.xaug_strategy,
                          cfg.augmented_size(omega.dim()), state.rng);
  std::vector<Vec> aug_unit;
  aug_unit.reserve(x_aug.size());
  for (const auto& x : x_aug.points) aug_unit.push_back(omega.to_unit(x));

  std::optional<double> delta;
  if (cfg.acquisition == AcquisitionKind::gmrs) {
    state.cycle = cycle_step(state.cycle, state.last_improved);
    delta = state.cycle.delta();
  }

  auto solve_with = [&](const ExplorationFunction<double>& z) {
    std::function<double(const Vec&)> acq;
    RescaleStats<double> stats;
    BaselineParams<double> base;
    if (cfg.acquisition == AcquisitionKind::gmrs) {
      stats.f = rescale_stats<double>(fhat, aug_unit);
      stats.z = rescale_stats<double>(z, aug_unit);
      acq = [&, d = *delta](const Vec& x) {
        const Vec u = omega.to_unit(x);
        return acquisition_from_values<double>(fhat(u), z(u), stats, d);
      };
    } else {
      std::vector<Vec> sample_unit;
      for (Eigen::Index i = 0; i < X.rows(); ++i) sample_unit.push_back(X.row(i).transpose());
      base.alpha = cfg.alpha;
      base.surrogate_spread = rescale_stats<double>(fhat, sample_unit).delta;
      acq = [&](const Vec& x) {
        const Vec u = omega.to_unit(x);
        return baseline_from_values<double>(cfg.acquisition, fhat(u), z(u), base);
      };
    }
    return inner_minimize(acq, omega, x_aug.points, state.rng, cfg.inner);
  };

  Vec x_new = solve_with(make_explore(cfg.explore));
  if (state.dataset.is_duplicate(x_new) && cfg.explore == ExploreVariant::gp_std) {
    x_new = solve_with(make_explore(ExploreVariant::idw));
  }
  if (state.dataset.is_duplicate(x_new)) {
    x_new = spread_perturbation(state.dataset, omega, state.rng);
  }

  PendingQuery q;
  q.phase = Phase::loop;
  q.candidate = std::move(x_new);
  q.incumbent = state.best;
  q.delta = delta;
  q.token = state.next_token++;
  state.pending = std::move(q);
  return *state.pending;
}

void record_measure(SessionState& state, const GmrsConfig& cfg, double y) {
  if (state.dataset.mode() != Mode::blackbox) {
    throw Error(ErrorCode::invalid_argument, "measures need a black-box session");
  }
  if (!state.pending || state.pending->phase != Phase::loop) {
    throw Error(ErrorCode::conflict, "no candidate is awaiting a measure");
  }
  const PendingQuery q = *state.pending;
  const std::size_t idx = state.dataset.add_measured(q.candidate, y);
  const bool improved = y <= *state.y_best;
  if (improved) {
    state.best = idx;
    state.y_best = y;
  }
  state.last_improved = improved;
  ++state.iteration;
  state.pending.reset();

  StepRecord rec;
  rec.phase = Phase::loop;
  rec.iter = state.iteration;
  rec.x = q.candidate;
  rec.delta = q.delta;
  rec.improved = improved;
  rec.value = y;
  state.history.push_back(std::move(rec));
  if (state.dataset.size() >= cfg.n_max) state.phase = Phase::finished;
}

void answer_query(SessionState& state, const GmrsConfig& cfg,
                  const ConstraintSet& omega, int b) {
  (void)omega;
  if (state.dataset.mode() != Mode::preference) {
    throw Error(ErrorCode::invalid_argument,
                "preferences need a preference session");
  }
  if (!state.pending) throw Error(ErrorCode::conflict, "no query is pending");
  if (b < -1 || b > 1) {
    throw Error(ErrorCode::invalid_argument, "preference must be -1, 0 or 1");
  }
  const PendingQuery q = *state.pending;

  StepRecord rec;
  rec.phase = q.phase;
  rec.x = q.candidate;
  rec.incumbent = state.dataset.sample(q.incumbent);
  rec.delta = q.delta;
  rec.value = b;
  rec.improved = (b == -1);

  if (q.phase == Phase::initial) {
    const std::size_t idx = *q.index;
    state.dataset.add_preference(idx, q.incumbent, b);
    if (b == -1) state.best = idx;
    ++state.init_cursor;
    if (state.init_cursor >= state.dataset.size()) {
      state.phase = state.dataset.size() < cfg.n_max ? Phase::loop : Phase::finished;
    }
  } else {
    const std::size_t idx = state.dataset.add_sample(q.candidate);
    state.dataset.add_preference(idx, q.incumbent, b);
    if (b == -1) state.best = idx;
    state.last_improved = (b == -1);
    ++state.iteration;
    rec.iter = state.iteration;
    if (state.dataset.size() >= cfg.n_max) state.phase = Phase::finished;
  }
  state.pending.reset();
  state.history.push_back(std::move(rec));
}

std::optional<PendingQuery> next_query(SessionState& state, const GmrsConfig& cfg,
                                       const ConstraintSet& omega) {
  if (state.pending) return state.pending;
  if (state.phase == Phase::initial) {
    PendingQuery q;
    q.phase = Phase::initial;
    q.index = state.init_cursor;
    q.candidate = state.dataset.sample(state.init_cursor);
    q.incumbent = state.best;
    q.token = state.next_token++;
    state.pending = std::move(q);
    return state.pending;
  }
  if (state.phase == Phase::loop && state.dataset.size() < cfg.n_max) {
    return propose(state, cfg, omega);
  }
  return std::nullopt;
}

void gmrs_step(SessionState& state, const GmrsConfig& cfg,
               const ConstraintSet& omega, const Evaluator& evaluator,
               Rng& oracle_rng) {
  const PendingQuery& q = propose(state, cfg, omega);
  if (state.dataset.mode() == Mode::blackbox) {
    record_measure(state, cfg, evaluator.measure(q.candidate));
  } else {
    const int b = evaluator.compare(q.candidate, state.x_best(), oracle_rng);
    answer_query(state, cfg, omega, b);
  }
}

RunResult gmrs_run(const GmrsConfig& cfg, const ConstraintSet& omega,
                   const Evaluator& evaluator) {
  Rng oracle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  SessionState state = initialize_session(cfg, omega, evaluator.measure);

  std::vector<double> curve;
  const auto& truth = evaluator.truth;
  auto annotate = [&](StepRecord& rec) {
    if (!truth) return;
    rec.f_true = truth(rec.x);
    rec.best_f_true = truth(state.x_best());
    curve.push_back(*rec.best_f_true);
  };

  if (cfg.mode == Mode::blackbox) {
    if (truth) {
      double running = std::numeric_limits<double>::infinity();
      for (const auto& x : state.dataset.samples()) {
        running = std::min(running, truth(x));
        curve.push_back(running);
      }
    }
    while (state.phase == Phase::loop) {
      gmrs_step(state, cfg, omega, evaluator, oracle_rng);
      annotate(state.history.back());
    }
  } else {
    if (!evaluator.compare) {
      throw Error(ErrorCode::invalid_argument,
                  "preference runs need a comparison oracle");
    }
    if (truth) curve.push_back(truth(state.dataset.sample(0)));
    while (auto q = next_query(state, cfg, omega)) {
      const int b = evaluator.compare(q->candidate, state.x_best(), oracle_rng);
      answer_query(state, cfg, omega, b);
      annotate(state.history.back());
    }
  }

  RunResult out{state.x_best(), std::nullopt, {}, std::move(curve), state};
  if (truth) out.f_best = truth(out.x_best);
  for (const auto& rec : state.history) {
    if (rec.phase == Phase::loop) out.history.push_back(rec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recalibration

namespace {

template <typename Score>
double select_by_grid(double current, const std::vector<double>& grid,
                      Score&& score) {
  double best_value = current;
  double best_score = std::numeric_limits<double>::infinity();
  std::optional<double> current_score;
  for (double v : grid) {
    double s;
    try {
      s = score(v);
    } catch (const Error&) {
      continue;
    }
    if (!std::isfinite(s)) continue;
    if (v == current) current_score = s;
    if (s < best_score) {
      best_score = s;
      best_value = v;
    }
  }
  if (current_score && *current_score <= best_score) return current;
  return best_value;
}

double rbf_loo_squared_error(const Mat& X, const Vec& y, RadialFamily family,
                             double shape) {
  RadialKernel<double> kernel{family, shape};
  Mat A = build_phi_matrix(kernel, X);
  Eigen::SelfAdjointEigenSolver<Mat> eig(A, Eigen::EigenvaluesOnly);
  const Vec ev = eig.eigenvalues().cwiseAbs();
  if (!(ev.maxCoeff() / ev.minCoeff() < kRbfConditionLimit)) {
    A.diagonal().array() += 1e-8 * A.trace() / static_cast<double>(A.rows());
  }
  const Mat inv = A.partialPivLu().inverse();
  const Vec beta = inv * y;
  // Rippa: the leave-one-out error at i is β_i / (A⁻¹)_ii.
  return (beta.array() / inv.diagonal().array()).square().sum();
}

double rbf_loo_misclassified(const Dataset& data, const Mat& X,
                             const GmrsConfig& cfg, double shape) {
  const auto pairs = index_pairs(data);
  const auto& prefs = data.preferences();
  if (prefs.size() < 2) return 0.0;
  RadialKernel<double> kernel{cfg.rbf.family, shape};
  PreferenceFitConfig<double> pcfg;
  pcfg.sigma = cfg.rbf.sigma;
  pcfg.lambda = cfg.rbf.lambda;
  double wrong = 0;
  for (std::size_t h = 0; h < prefs.size(); ++h) {
    std::vector<int> p;
    std::vector<std::pair<std::size_t, std::size_t>> m;
    for (std::size_t j = 0; j < prefs.size(); ++j) {
      if (j == h) continue;
      p.push_back(prefs[j]);
      m.push_back(pairs[j]);
    }
    const auto fit = fit_preference_rbf(kernel, X, p, m, pcfg);
    const Vec xl = X.row(static_cast<Eigen::Index>(pairs[h].first)).transpose();
    const Vec xk = X.row(static_cast<Eigen::Index>(pairs[h].second)).transpose();
    if (surrogate_preference(fit.surrogate, xl, xk, cfg.rbf.sigma) != prefs[h]) {
      wrong += 1;
    }
  }
  return wrong;
}

}  // namespace

Hyperparameters recalibrate(const SessionState& state, const GmrsConfig& cfg,
                            const ConstraintSet& omega) {
  Hyperparameters out = state.hyper;
  const Dataset& data = state.dataset;
  const Mat X = unit_samples(data, omega);

  if (cfg.surrogate == SurrogateKind::gp) {
    out.gp_lengthscale = select_by_grid(
        state.hyper.gp_lengthscale, cfg.gp.lengthscale_grid, [&](double ell) {
          Hyperparameters h = state.hyper;
          h.gp_lengthscale = ell;
          const FittedSurrogate s = fit_with(data, cfg, omega, h);
          return std::visit(
              [](const auto& m) -> double {
                if constexpr (requires { m.log_marginal_likelihood(); }) {
                  return -m.log_marginal_likelihood();
                } else {
                  return std::numeric_limits<double>::infinity();
                }
              },
              s.model());
        });
    return out;
  }

  if (data.mode() == Mode::blackbox) {
    const Vec y = measures_vector(data);
    out.rbf_shape = select_by_grid(state.hyper.rbf_shape, cfg.rbf.shape_grid,
                                   [&](double eps) {
                                     return rbf_loo_squared_error(X, y, cfg.rbf.family, eps);
                                   });
  } else {
    out.rbf_shape = select_by_grid(state.hyper.rbf_shape, cfg.rbf.shape_grid,
                                   [&](double eps) {
                                     return rbf_loo_misclassified(data, X, cfg, eps);
                                   });
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void put_number(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void write_history_csv(std::ostream& out, const std::vector<StepRecord>& history,
                       Eigen::Index dim) {
  out << "iter";
  for (Eigen::Index d = 1; d <= dim; ++d) out << ",x" << d;
  out << ",f_true,best_f_true,delta,improved\n";
  for (const auto& rec : history) {
    if (rec.phase != Phase::loop) continue;
    out << rec.iter;
    for (Eigen::Index d = 0; d < dim; ++d) {
      out << ',';
      put_number(out, rec.x[d]);
    }
    out << ',';
    if (rec.f_true) put_number(out, *rec.f_true);
    out << ',';
    if (rec.best_f_true) put_number(out, *rec.best_f_true);
    out << ',';
    if (rec.delta) put_number(out, *rec.delta);
    out << ',' << (rec.improved ? 1 : 0) << '\n';
  }
}

}  // namespace gmrs
