#pragma once

// The optimization loop: experimental design, surrogate fitting, acquisition
// minimization, evaluation and best-sample bookkeeping, for both the
// black-box and the preference setting.

#include "gmrs/acquisition.hpp"
#include "gmrs/domain.hpp"
#include "gmrs/explore.hpp"
#include "gmrs/gp.hpp"
#include "gmrs/rbf.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <cstdint>
#include <vector>

namespace gmrs {

enum class SurrogateKind { rbf, gp };

const char* to_string(SurrogateKind k) noexcept;
SurrogateKind parse_surrogate_kind(const std::string& s);

struct RbfSettings {
  RadialFamily family = RadialFamily::inverse_quadratic;
  double shape = 1.0;
  double sigma = 1e-2;
  double lambda = 1e-6;
  std::vector<double> shape_grid{0.1, 0.3, 1.0, 3.0, 10.0};
};

struct GpSettings {
  double signal_var = 1.0;
  double lengthscale = 0.5;
  /// Noise standard deviation σ_η; unset means 0 (black-box) or 0.1
  /// (preference).
  std::optional<double> noise;
  std::vector<double> lengthscale_grid{0.1, 0.2, 0.5, 1.0};

  double noise_std(Mode mode) const {
    return noise.value_or(mode == Mode::blackbox ? 0.0 : 0.1);
  }
};

struct InnerSolverSettings {
  std::size_t random_per_dim = 512;
  std::size_t starts = 5;
  double initial_step = 0.1;  // fraction of the box width
  double contraction = 0.5;
  double min_step = 1e-6;
  std::size_t max_evaluations = 20000;  // per pattern search
};

struct GmrsConfig {
  Mode mode = Mode::blackbox;
  SurrogateKind surrogate = SurrogateKind::rbf;
  ExploreVariant explore = ExploreVariant::idw;
  std::vector<double> delta_cycle{0.95, 0.7, 0.35, 0.0};
  std::size_t n_init = 4;
  std::size_t n_max = 70;
  std::uint64_t seed = 0;
  std::size_t recalibrate_every = 0;  // 0 disables recalibration
  AcquisitionKind acquisition = AcquisitionKind::gmrs;
  double alpha = 1.0;  // baseline acquisitions only
  std::size_t naug = 0;  // 0 means 100·n
  AugmentStrategy xaug_strategy = AugmentStrategy::random_uniform;
  RbfSettings rbf;
  GpSettings gp;
  InnerSolverSettings inner;

  /// Throws validation errors describing the first violated invariant.
  void validate() const;
  std::size_t augmented_size(Eigen::Index dim) const {
    return naug ? naug : 100 * static_cast<std::size_t>(dim);
  }
};

/// Current surrogate hyperparameters (changed only by recalibration).
struct Hyperparameters {
  double rbf_shape = 1.0;
  double gp_lengthscale = 0.5;
};

enum class Phase { initial, loop, finished };

const char* to_string(Phase p) noexcept;
Phase parse_phase(const std::string& s);

/// A pairwise query awaiting an answer b = π(candidate, incumbent).
struct PendingQuery {
  Phase phase = Phase::initial;
  Vec candidate;
  std::size_t incumbent = 0;         // index of x_best in the dataset
  std::optional<std::size_t> index;  // dataset index of an initial sample
  std::optional<double> delta;       // loop queries only
  std::uint64_t token = 0;
};

struct StepRecord {
  Phase phase = Phase::loop;
  std::size_t iter = 0;  // loop iteration, 1-based; 0 for initial entries
  Vec x;                 // evaluated or compared sample
  Vec incumbent;         // x_best it was compared against (preference)
  std::optional<double> delta;
  bool improved = false;
  double value = 0;  // measure (black-box) or preference b
  std::optional<double> f_true;
  std::optional<double> best_f_true;
};

struct SessionState {
  explicit SessionState(Dataset data) : dataset(std::move(data)) {}

  Dataset dataset;
  std::size_t best = 0;
  std::optional<double> y_best;
  DeltaCycle cycle;
  bool last_improved = true;
  std::size_t iteration = 0;
  Phase phase = Phase::initial;
  std::size_t init_cursor = 1;
  Hyperparameters hyper;
  Rng rng;
  std::uint64_t next_token = 1;
  std::optional<PendingQuery> pending;
  std::vector<StepRecord> history;

  const Vec& x_best() const { return dataset.sample(best); }
};

/// Latin hypercube design: each coordinate's N values fall in N distinct
/// equal-width strata. Points violating non-bound constraints are redrawn
/// within their strata up to 100 times.
std::vector<Vec> lhd_design(const ConstraintSet& omega, std::size_t n, Rng& rng);

/// Compass pattern search from x (value fx): poll ±step·width along each
/// axis, projected onto the bounds, move on the first improvement, contract
/// the step when no poll improves. Points outside Ω count as +∞.
std::pair<Vec, double> compass_search(const std::function<double(const Vec&)>& f,
                                      const ConstraintSet& omega, Vec x, double fx,
                                      const InnerSolverSettings& settings);

/// Global minimization of a cheap function over Ω: evaluate the augmented
/// set and random points, refine the best few by compass pattern search.
Vec inner_minimize(const std::function<double(const Vec&)>& acq,
                   const ConstraintSet& omega, const std::vector<Vec>& x_aug,
                   Rng& rng, const InnerSolverSettings& settings = {});

/// Surrogate fitted on unit-box coordinates.
class FittedSurrogate {
 public:
  using Model = std::variant<RbfSurrogate<double>, GpBlackboxModel<double>,
                             GpPreferenceModel<double>>;

  explicit FittedSurrogate(Model model) : model_(std::make_shared<Model>(std::move(model))) {}

  double operator()(const Vec& u) const;
  const Model& model() const { return *model_; }
  /// Predictive variance when the surrogate is a GP.
  std::optional<PredictiveDistribution<double>> predict(const Vec& u) const;

 private:
  std::shared_ptr<const Model> model_;
};

FittedSurrogate fit_surrogate(const SessionState& state, const GmrsConfig& cfg,
                              const ConstraintSet& omega);

/// Evaluation callbacks. Black-box runs use `measure`; preference runs use
/// `compare`. `truth`, when set, is only used for reporting.
struct Evaluator {
  std::function<double(const Vec&)> measure;
  std::function<int(const Vec&, const Vec&, Rng&)> compare;
  std::function<double(const Vec&)> truth;

  static Evaluator blackbox(std::function<double(const Vec&)> f);
  static Evaluator preference(PreferenceOracle oracle);
};

/// Fresh state after the experimental design. Black-box: samples are
/// measured immediately. Preference: the initial chain starts; call
/// next_query for the first comparison.
SessionState initialize_session(const GmrsConfig& cfg, const ConstraintSet& omega,
                                const std::function<double(const Vec&)>& measure = {});

/// Compute x_{N+1} for the next loop iteration and store it as pending.
const PendingQuery& propose(SessionState& state, const GmrsConfig& cfg,
                            const ConstraintSet& omega);

/// Black-box: record y for the pending candidate.
void record_measure(SessionState& state, const GmrsConfig& cfg, double y);

/// Preference: record b = π(candidate, incumbent) for the pending query and
/// advance the initial chain or the loop.
void answer_query(SessionState& state, const GmrsConfig& cfg,
                  const ConstraintSet& omega, int b);

/// Preference: the pending query, creating it when none is pending (the next
/// initial-chain comparison or a new loop proposal). Empty once finished.
std::optional<PendingQuery> next_query(SessionState& state, const GmrsConfig& cfg,
                                       const ConstraintSet& omega);

/// One full loop iteration with an automatic evaluator.
void gmrs_step(SessionState& state, const GmrsConfig& cfg,
               const ConstraintSet& omega, const Evaluator& evaluator,
               Rng& oracle_rng);

struct RunResult {
  Vec x_best;
  std::optional<double> f_best;
  std::vector<StepRecord> history;  // loop iterations only
  /// Best-so-far true objective after each of the n_max samples.
  std::vector<double> best_curve;
  SessionState state;
};

RunResult gmrs_run(const GmrsConfig& cfg, const ConstraintSet& omega,
                   const Evaluator& evaluator);

/// Grid-search the surrogate hyperparameters on the current data.
Hyperparameters recalibrate(const SessionState& state, const GmrsConfig& cfg,
                            const ConstraintSet& omega);

/// CSV: iter, x1..xn, f_true, best_f_true, delta, improved.
void write_history_csv(std::ostream& out, const std::vector<StepRecord>& history,
                       Eigen::Index dim);

}  // namespace gmrs
