#pragma once

#include "gmrs/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace gmrs {

using Rng = std::mt19937_64;

inline constexpr double kFeasibilityTol = 1e-8;
/// Duplicate threshold, infinity norm in unit-box coordinates.
inline constexpr double kDuplicateTol = 1e-9;

/// Feasible set: bounds plus optional linear and nonlinear constraints.
class ConstraintSet {
 public:
  using VectorFn = std::function<Vec(const Vec&)>;

  ConstraintSet(Vec lower, Vec upper);

  ConstraintSet& with_linear_ineq(Mat a, Vec b);
  ConstraintSet& with_linear_eq(Mat a, Vec b);
  ConstraintSet& with_nonlinear_ineq(VectorFn g);
  ConstraintSet& with_nonlinear_eq(VectorFn g);

  Eigen::Index dim() const { return lower_.size(); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  Vec width() const { return upper_ - lower_; }

  const std::optional<std::pair<Mat, Vec>>& linear_ineq() const { return linear_ineq_; }
  const std::optional<std::pair<Mat, Vec>>& linear_eq() const { return linear_eq_; }
  bool has_nonlinear_constraints() const {
    return static_cast<bool>(nonlinear_ineq_) || static_cast<bool>(nonlinear_eq_);
  }
  bool has_non_bound_constraints() const;

  bool contains(const Vec& x) const;
  bool within_bounds(const Vec& x) const;
  bool satisfies_non_bound(const Vec& x) const;

  /// Sum of constraint violations, zero iff contains(x).
  double violation(const Vec& x) const;

  Vec to_unit(const Vec& x) const;
  Vec from_unit(const Vec& u) const;
  Vec clamp(const Vec& x) const;

 private:
  void check_dim(const Vec& x) const;

  Vec lower_;
  Vec upper_;
  std::optional<std::pair<Mat, Vec>> linear_ineq_;
  std::optional<std::pair<Mat, Vec>> linear_eq_;
  VectorFn nonlinear_ineq_;
  VectorFn nonlinear_eq_;
};

bool contains(const ConstraintSet& cs, const Vec& x);

enum class Mode { blackbox, preference };

const char* to_string(Mode mode) noexcept;
Mode parse_mode(const std::string& s);

struct PreferencePair {
  std::size_t left;   // ℓ(h)
  std::size_t right;  // κ(h)
};

/// Append-only collection of distinct samples with either measures or
/// pairwise preferences attached.
class Dataset {
 public:
  Dataset(Mode mode, Eigen::Index dim);
  /// `unit_scale` holds the box widths used to rescale distances for the
  /// duplicate check.
  Dataset(Mode mode, Vec unit_scale);

  Mode mode() const { return mode_; }
  Eigen::Index dim() const { return scale_.size(); }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  const std::vector<Vec>& samples() const { return samples_; }
  const Vec& sample(std::size_t i) const { return samples_.at(i); }
  const std::vector<double>& measures() const { return measures_; }
  const std::vector<int>& preferences() const { return preferences_; }
  const std::vector<PreferencePair>& mapping() const { return mapping_; }
  std::size_t num_preferences() const { return preferences_.size(); }
  const Vec& unit_scale() const { return scale_; }

  /// Index of a stored sample within kDuplicateTol of x, if any.
  std::optional<std::size_t> find(const Vec& x) const;
  bool is_duplicate(const Vec& x) const { return find(x).has_value(); }

  /// Black-box mode: append (x, y). Throws on duplicates.
  std::size_t add_measured(const Vec& x, double y);
  /// Preference mode: append a sample with no comparison yet.
  std::size_t add_sample(const Vec& x);
  /// Preference mode: record b = π(x_left, x_right).
  void add_preference(std::size_t left, std::size_t right, int b);

  /// N×n matrix with one sample per row.
  Mat sample_matrix() const;

 private:
  void append(const Vec& x);

  Mode mode_;
  Vec scale_;
  std::vector<Vec> samples_;
  std::vector<double> measures_;
  std::vector<int> preferences_;
  std::vector<PreferencePair> mapping_;
};

/// Synthetic decision-maker driven by a hidden latent cost.
struct PreferenceOracle {
  std::function<double(const Vec&)> latent;
  double noise_std = 0.0;

  int compare(const Vec& xi, const Vec& xj, Rng& rng) const;
};

/// Noiseless π: -1 if f(xi) < f(xj), 0 if equal, 1 otherwise.
int preference_from_values(double fi, double fj) noexcept;

struct KnownMinimum {
  Vec x;
  double f;
  std::string provenance;
};

struct TestFunction {
  std::string name;
  Eigen::Index dim;
  std::function<double(const Vec&)> evaluate;
  ConstraintSet box;
  std::optional<KnownMinimum> known_min;
};

double adjiman(const Vec& x);
double branin(const Vec& x);
double six_hump_camel(const Vec& x);

/// Look up a benchmark function by name. Throws not_found.
TestFunction make_test_function(const std::string& name);
std::vector<std::string> test_function_names();

struct ChainResult {
  Dataset dataset;
  std::size_t best;
};

/// Tournament chain: compare each sample against the running best,
/// producing N-1 preferences.
ChainResult chain_initial_preferences(const PreferenceOracle& oracle,
                                      const std::vector<Vec>& samples, Rng& rng,
                                      const Vec& unit_scale);
ChainResult chain_initial_preferences(const PreferenceOracle& oracle,
                                      const std::vector<Vec>& samples, Rng& rng);

}  // namespace gmrs
