#pragma once

// Proper exploration functions: zero at the samples, negative elsewhere (or,
// for the GP variant, minimal predictive spread at the samples).

#include "gmrs/gp.hpp"
#include "gmrs/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

namespace gmrs {

enum class ExploreVariant { idw, msrs, gp_std };

const char* to_string(ExploreVariant v) noexcept;
ExploreVariant parse_explore_variant(const std::string& s);

/// Inverse distance weighting distance: 0 on samples, otherwise
/// −(2/π)·atan(1/Σ 1/‖x − x_i‖²). Range (−1, 0].
template <typename Scalar, typename Derived>
Scalar idw_distance(const MatrixX<Scalar>& X, const Eigen::MatrixBase<Derived>& x,
                    Scalar sample_tol = Scalar(1e-9)) {
  if (X.rows() == 0) {
    throw Error(ErrorCode::invalid_argument, "IDW needs at least one sample");
  }
  Scalar weight_sum = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Scalar d2 = (X.row(i) - x.transpose()).squaredNorm();
    if (d2 <= sample_tol * sample_tol) return Scalar(0);
    weight_sum += Scalar(1) / d2;
  }
  return -Scalar(2) / std::numbers::pi_v<Scalar> * std::atan(Scalar(1) / weight_sum);
}

/// −min_i ‖x − x_i‖.
template <typename Scalar, typename Derived>
Scalar msrs_mindist(const MatrixX<Scalar>& X, const Eigen::MatrixBase<Derived>& x) {
  if (X.rows() == 0) {
    throw Error(ErrorCode::invalid_argument,
                "min-distance exploration needs at least one sample");
  }
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    best = std::min(best, (X.row(i) - x.transpose()).squaredNorm());
  }
  return -std::sqrt(best);
}

/// −√(predictive variance) of a fitted GP model.
template <typename Model, typename Derived>
auto neg_gp_std(const Model& model, const Eigen::MatrixBase<Derived>& x) {
  using std::sqrt;
  return -sqrt(model.predict(x).variance);
}

/// Exploration function bound to its data.
template <typename Scalar>
class ExplorationFunction {
 public:
  using Predictor = std::function<PredictiveDistribution<Scalar>(const VectorX<Scalar>&)>;

  static ExplorationFunction idw(MatrixX<Scalar> X) {
    return ExplorationFunction(ExploreVariant::idw, std::move(X), {});
  }
  static ExplorationFunction msrs(MatrixX<Scalar> X) {
    return ExplorationFunction(ExploreVariant::msrs, std::move(X), {});
  }
  /// The model must outlive the returned function.
  template <typename Model>
  static ExplorationFunction gp_std(const Model& model) {
    return ExplorationFunction(
        ExploreVariant::gp_std, model.inputs(),
        [&model](const VectorX<Scalar>& x) { return model.predict(x); });
  }

  Scalar operator()(const VectorX<Scalar>& x) const {
    switch (variant_) {
      case ExploreVariant::idw: return idw_distance<Scalar>(X_, x);
      case ExploreVariant::msrs: return msrs_mindist<Scalar>(X_, x);
      case ExploreVariant::gp_std: return -std::sqrt(predictor_(x).variance);
    }
    return Scalar(0);
  }

  ExploreVariant variant() const { return variant_; }
  const MatrixX<Scalar>& samples() const { return X_; }

 private:
  ExplorationFunction(ExploreVariant v, MatrixX<Scalar> X, Predictor p)
      : variant_(v), X_(std::move(X)), predictor_(std::move(p)) {}

  ExploreVariant variant_;
  MatrixX<Scalar> X_;
  Predictor predictor_;
};

}  // namespace gmrs
