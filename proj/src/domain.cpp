#include "gmrs/domain.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace gmrs {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::singular_system: return "singular_system";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::io: return "io";
    case ErrorCode::validation: return "validation";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::unsupported: return "unsupported";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// ConstraintSet

ConstraintSet::ConstraintSet(Vec lower, Vec upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size()) {
    throw Error(ErrorCode::invalid_argument,
                "bounds must be non-empty and of equal length");
  }
  for (Eigen::Index d = 0; d < lower_.size(); ++d) {
    if (!(lower_[d] < upper_[d]) || !std::isfinite(lower_[d]) ||
        !std::isfinite(upper_[d])) {
      std::ostringstream msg;
      msg << "lower bound must be strictly below upper bound in coordinate "
          << d;
      throw Error(ErrorCode::invalid_argument, msg.str());
    }
  }
}

ConstraintSet& ConstraintSet::with_linear_ineq(Mat a, Vec b) {
  if (a.cols() != dim() || a.rows() != b.size()) {
    throw Error(ErrorCode::invalid_argument, "A_ineq/b_ineq shape mismatch");
  }
  linear_ineq_.emplace(std::move(a), std::move(b));
  return *this;
}

ConstraintSet& ConstraintSet::with_linear_eq(Mat a, Vec b) {
  if (a.cols() != dim() || a.rows() != b.size()) {
    throw Error(ErrorCode::invalid_argument, "A_eq/b_eq shape mismatch");
  }
  linear_eq_.emplace(std::move(a), std::move(b));
  return *this;
}

ConstraintSet& ConstraintSet::with_nonlinear_ineq(VectorFn g) {
  nonlinear_ineq_ = std::move(g);
  return *this;
}

ConstraintSet& ConstraintSet::with_nonlinear_eq(VectorFn g) {
  nonlinear_eq_ = std::move(g);
  return *this;
}

bool ConstraintSet::has_non_bound_constraints() const {
  return linear_ineq_ || linear_eq_ || nonlinear_ineq_ || nonlinear_eq_;
}

void ConstraintSet::check_dim(const Vec& x) const {
  if (x.size() != dim()) {
    std::ostringstream msg;
    msg << "dimension mismatch: expected " << dim() << ", got " << x.size();
    throw Error(ErrorCode::invalid_argument, msg.str());
  }
}

bool ConstraintSet::within_bounds(const Vec& x) const {
  check_dim(x);
  return (x.array() >= lower_.array()).all() &&
         (x.array() <= upper_.array()).all();
}

bool ConstraintSet::satisfies_non_bound(const Vec& x) const {
  check_dim(x);
  if (linear_ineq_) {
    const auto& [a, b] = *linear_ineq_;
    if (((a * x - b).array() > kFeasibilityTol).any()) return false;
  }
  if (linear_eq_) {
    const auto& [a, b] = *linear_eq_;
    if (((a * x - b).array().abs() > kFeasibilityTol).any()) return false;
  }
  if (nonlinear_ineq_ && (nonlinear_ineq_(x).array() > kFeasibilityTol).any()) {
    return false;
  }
  if (nonlinear_eq_ &&
      (nonlinear_eq_(x).array().abs() > kFeasibilityTol).any()) {
    return false;
  }
  return true;
}

bool ConstraintSet::contains(const Vec& x) const {
  return within_bounds(x) && satisfies_non_bound(x);
}

double ConstraintSet::violation(const Vec& x) const {
  check_dim(x);
  double v = (lower_ - x).cwiseMax(0.0).sum() + (x - upper_).cwiseMax(0.0).sum();
  if (linear_ineq_) {
    const auto& [a, b] = *linear_ineq_;
    v += (a * x - b).cwiseMax(0.0).sum();
  }
  if (linear_eq_) {
    const auto& [a, b] = *linear_eq_;
    v += (a * x - b).cwiseAbs().sum();
  }
  if (nonlinear_ineq_) v += nonlinear_ineq_(x).cwiseMax(0.0).sum();
  if (nonlinear_eq_) v += nonlinear_eq_(x).cwiseAbs().sum();
  return contains(x) ? 0.0 : std::max(v, kFeasibilityTol);
}

Vec ConstraintSet::to_unit(const Vec& x) const {
  check_dim(x);
  return ((x - lower_).array() / (upper_ - lower_).array()).matrix();
}

Vec ConstraintSet::from_unit(const Vec& u) const {
  check_dim(u);
  return lower_ + (u.array() * (upper_ - lower_).array()).matrix();
}

Vec ConstraintSet::clamp(const Vec& x) const {
  check_dim(x);
  return x.cwiseMax(lower_).cwiseMin(upper_);
}

bool contains(const ConstraintSet& cs, const Vec& x) { return cs.contains(x); }

const char* to_string(Mode mode) noexcept {
  return mode == Mode::blackbox ? "blackbox" : "preference";
}

Mode parse_mode(const std::string& s) {
  if (s == "blackbox") return Mode::blackbox;
  if (s == "preference") return Mode::preference;
  throw Error(ErrorCode::invalid_argument, "unknown mode '" + s + "'");
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(Mode mode, Eigen::Index dim)
    : Dataset(mode, Vec::Ones(dim)) {}

Dataset::Dataset(Mode mode, Vec unit_scale)
    : mode_(mode), scale_(std::move(unit_scale)) {
  if (scale_.size() == 0 || (scale_.array() <= 0.0).any()) {
    throw Error(ErrorCode::invalid_argument,
                "dataset scale must be non-empty and positive");
  }
}

std::optional<std::size_t> Dataset::find(const Vec& x) const {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double d =
        ((x - samples_[i]).array() / scale_.array()).abs().maxCoeff();
    if (d <= kDuplicateTol) return i;
  }
  return std::nullopt;
}

void Dataset::append(const Vec& x) {
  if (x.size() != dim()) {
    throw Error(ErrorCode::invalid_argument, "sample dimension mismatch");
  }
  if (auto dup = find(x)) {
    std::ostringstream msg;
    msg << "sample duplicates existing sample " << *dup;
    throw Error(ErrorCode::invalid_argument, msg.str());
  }
  samples_.push_back(x);
}

std::size_t Dataset::add_measured(const Vec& x, double y) {
  if (mode_ != Mode::blackbox) {
    throw Error(ErrorCode::invalid_argument,
                "measures can only be added to a black-box dataset");
  }
  append(x);
  measures_.push_back(y);
  return samples_.size() - 1;
}

std::size_t Dataset::add_sample(const Vec& x) {
  if (mode_ != Mode::preference) {
    throw Error(ErrorCode::invalid_argument,
                "black-box samples require a measure");
  }
  append(x);
  return samples_.size() - 1;
}

void Dataset::add_preference(std::size_t left, std::size_t right, int b) {
  if (mode_ != Mode::preference) {
    throw Error(ErrorCode::invalid_argument,
                "preferences can only be added to a preference dataset");
  }
  if (left >= samples_.size() || right >= samples_.size() || left == right) {
    throw Error(ErrorCode::invalid_argument, "invalid preference indices");
  }
  if (b < -1 || b > 1) {
    throw Error(ErrorCode::invalid_argument, "preference must be -1, 0 or 1");
  }
  const std::size_t n = samples_.size();
  if (preferences_.size() + 1 > n * (n - 1) / 2) {
    throw Error(ErrorCode::invalid_argument,
                "more preferences than distinct sample pairs");
  }
  preferences_.push_back(b);
  mapping_.push_back({left, right});
}

Mat Dataset::sample_matrix() const {
  Mat m(static_cast<Eigen::Index>(samples_.size()), dim());
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = samples_[i].transpose();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Oracles and test functions

int preference_from_values(double fi, double fj) noexcept {
  if (fi < fj) return -1;
  if (fi > fj) return 1;
  return 0;
}

int PreferenceOracle::compare(const Vec& xi, const Vec& xj, Rng& rng) const {
  if (xi.size() != xj.size()) {
    throw Error(ErrorCode::invalid_argument, "compared samples differ in size");
  }
  double fi = latent(xi);
  double fj = latent(xj);
  if (noise_std <= 0.0) return preference_from_values(fi, fj);
  std::normal_distribution<double> noise(0.0, noise_std);
  fi += noise(rng);
  fj += noise(rng);
  return fi < fj ? -1 : 1;
}

double adjiman(const Vec& x) {
  if (x.size() != 2) {
    throw Error(ErrorCode::invalid_argument, "adjiman is two-dimensional");
  }
  return std::cos(x[0]) * std::sin(x[1]) - x[0] / (x[1] * x[1] + 1.0);
}

double branin(const Vec& x) {
  if (x.size() != 2) {
    throw Error(ErrorCode::invalid_argument, "branin is two-dimensional");
  }
  constexpr double pi = std::numbers::pi;
  const double b = 5.1 / (4.0 * pi * pi);
  const double c = 5.0 / pi;
  const double t = 1.0 / (8.0 * pi);
  const double s = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
  return s * s + 10.0 * (1.0 - t) * std::cos(x[0]) + 10.0;
}

double six_hump_camel(const Vec& x) {
  if (x.size() != 2) {
    throw Error(ErrorCode::invalid_argument,
                "six-hump camel is two-dimensional");
  }
  const double a = x[0] * x[0];
  const double b = x[1] * x[1];
  return (4.0 - 2.1 * a + a * a / 3.0) * a + x[0] * x[1] + (-4.0 + 4.0 * b) * b;
}

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TestFunction make_test_function(const std::string& name) {
  if (name == "adjiman") {
    return {name, 2, adjiman, ConstraintSet(vec2(-1, -1), vec2(2, 1)),
            std::nullopt};
  }
  if (name == "branin") {
    return {name, 2, branin, ConstraintSet(vec2(-5, 0), vec2(10, 15)),
            std::nullopt};
  }
  if (name == "camelback" || name == "six-hump-camel") {
    return {name, 2, six_hump_camel, ConstraintSet(vec2(-3, -2), vec2(3, 2)),
            std::nullopt};
  }
  throw Error(ErrorCode::not_found, "unknown test function '" + name + "'");
}

std::vector<std::string> test_function_names() {
  return {"adjiman", "branin", "camelback"};
}

// ---------------------------------------------------------------------------

ChainResult chain_initial_preferences(const PreferenceOracle& oracle,
                                      const std::vector<Vec>& samples,
                                      Rng& rng, const Vec& unit_scale) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::invalid_argument,
                "the preference chain needs at least two samples");
  }
  Dataset data(Mode::preference, unit_scale);
  for (const auto& x : samples) data.add_sample(x);

  std::size_t best = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const int b = oracle.compare(samples[i], samples[best], rng);
    data.add_preference(i, best, b);
    if (b == -1) best = i;
  }
  return {std::move(data), best};
}

ChainResult chain_initial_preferences(const PreferenceOracle& oracle,
                                      const std::vector<Vec>& samples,
                                      Rng& rng) {
  if (samples.empty()) {
    throw Error(ErrorCode::invalid_argument,
                "the preference chain needs at least two samples");
  }
  return chain_initial_preferences(oracle, samples, rng,
                                   Vec::Ones(samples.front().size()));
}

}  // namespace gmrs
