#pragma once

// Radial basis function surrogates: interpolation of measured values and
// slack-QP fitting of pairwise preferences.

#include "gmrs/qp.hpp"
#include "gmrs/types.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <string>
#include <vector>

namespace gmrs {

enum class RadialFamily {
  gaussian,
  inverse_quadratic,
  multiquadric,
  linear,
  thin_plate,
};

const char* to_string(RadialFamily f) noexcept;
RadialFamily parse_radial_family(const std::string& s);

template <typename Scalar>
struct RadialKernel {
  RadialFamily family = RadialFamily::inverse_quadratic;
  Scalar shape = Scalar(1);

  /// φ(ε·r) for a distance r ≥ 0.
  Scalar operator()(Scalar r) const {
    using std::exp;
    using std::log;
    using std::sqrt;
    const Scalar s = shape * r;
    switch (family) {
      case RadialFamily::gaussian: return exp(-s * s);
      case RadialFamily::inverse_quadratic: return Scalar(1) / (Scalar(1) + s * s);
      case RadialFamily::multiquadric: return sqrt(Scalar(1) + s * s);
      case RadialFamily::linear: return s;
      case RadialFamily::thin_plate:
        return s > Scalar(0) ? s * s * log(s) : Scalar(0);
    }
    return Scalar(0);
  }
};

/// Φ(i,j) = φ(ε‖x_i − x_j‖) for centers stored one per row.
template <typename Scalar, typename Derived>
MatrixX<Scalar> build_phi_matrix(const RadialKernel<Scalar>& kernel,
                                 const Eigen::MatrixBase<Derived>& centers) {
  const Eigen::Index n = centers.rows();
  MatrixX<Scalar> phi(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    phi(i, i) = kernel(Scalar(0));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Scalar v = kernel((centers.row(i) - centers.row(j)).norm());
      phi(i, j) = v;
      phi(j, i) = v;
    }
  }
  return phi;
}

/// f̂(x) = Σ β_i φ(ε‖x − x_i‖).
template <typename Scalar>
class RbfSurrogate {
 public:
  RbfSurrogate() = default;
  RbfSurrogate(RadialKernel<Scalar> kernel, MatrixX<Scalar> centers,
               VectorX<Scalar> weights)
      : kernel_(kernel), centers_(std::move(centers)), weights_(std::move(weights)) {
    if (centers_.rows() != weights_.size()) {
      throw Error(ErrorCode::invalid_argument,
                  "one weight per center is required");
    }
  }

  template <typename Derived>
  VectorX<Scalar> basis(const Eigen::MatrixBase<Derived>& x) const {
    VectorX<Scalar> phi(centers_.rows());
    for (Eigen::Index i = 0; i < centers_.rows(); ++i) {
      phi[i] = kernel_((centers_.row(i) - x.transpose()).norm());
    }
    return phi;
  }

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
    Scalar acc = 0;
    for (Eigen::Index i = 0; i < centers_.rows(); ++i) {
      acc += weights_[i] * kernel_((centers_.row(i) - x.transpose()).norm());
    }
    return acc;
  }

  template <typename Derived>
  Scalar evaluate(const Eigen::MatrixBase<Derived>& x) const {
    return (*this)(x);
  }

  const RadialKernel<Scalar>& kernel() const { return kernel_; }
  const MatrixX<Scalar>& centers() const { return centers_; }
  const VectorX<Scalar>& weights() const { return weights_; }

 private:
  RadialKernel<Scalar> kernel_{};
  MatrixX<Scalar> centers_;
  VectorX<Scalar> weights_;
};

inline constexpr double kRbfConditionLimit = 1e12;

template <typename Scalar>
struct InterpolationFit {
  RbfSurrogate<Scalar> surrogate;
  Scalar condition = 0;   // estimated cond(Φ)
  Scalar ridge = 0;       // diagonal shift applied, 0 when none
  Scalar max_residual = 0;
};

/// Solve Φβ = y. When cond(Φ) ≥ 1e12 a ridge of 1e-8·trace(Φ)/N is added
/// and the interpolation residual is reported rather than guaranteed.
template <typename Scalar>
InterpolationFit<Scalar> fit_interpolant(const RadialKernel<Scalar>& kernel,
                                         const MatrixX<Scalar>& centers,
                                         const VectorX<Scalar>& y) {
  const Eigen::Index n = centers.rows();
  if (n == 0 || y.size() != n) {
    throw Error(ErrorCode::invalid_argument,
                "interpolation needs one measure per center and N >= 1");
  }
  const MatrixX<Scalar> phi = build_phi_matrix(kernel, centers);

  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(phi, Eigen::EigenvaluesOnly);
  const VectorX<Scalar> ev = eig.eigenvalues().cwiseAbs();
  const Scalar smallest = ev.minCoeff();
  const Scalar cond = smallest > Scalar(0)
                          ? ev.maxCoeff() / smallest
                          : std::numeric_limits<Scalar>::infinity();

  InterpolationFit<Scalar> fit;
  fit.condition = cond;
  MatrixX<Scalar> system = phi;
  if (!(cond < Scalar(kRbfConditionLimit))) {
    Scalar trace = phi.trace();
    if (!(trace > Scalar(0))) trace = ev.sum();
    fit.ridge = Scalar(1e-8) * trace / Scalar(n);
    system.diagonal().array() += fit.ridge;
  }
  VectorX<Scalar> beta = system.partialPivLu().solve(y);
  if (!beta.allFinite()) {
    throw Error(ErrorCode::singular_system,
                "RBF interpolation system is singular (cond estimate " +
                    std::to_string(static_cast<double>(cond)) + ")");
  }
  fit.max_residual = n ? (phi * beta - y).cwiseAbs().maxCoeff() : Scalar(0);
  fit.surrogate = RbfSurrogate<Scalar>(kernel, centers, std::move(beta));
  return fit;
}

/// π̂: −1 if Δ ≤ −σ, 0 if |Δ| ≤ σ, 1 if Δ ≥ σ, Δ = f̂(xi) − f̂(xj).
template <typename Surrogate, typename Vector, typename Scalar>
int surrogate_preference(const Surrogate& fhat, const Vector& xi,
                         const Vector& xj, Scalar sigma) {
  const Scalar delta = fhat(xi) - fhat(xj);
  if (delta <= -sigma) return -1;
  if (delta <= sigma) return 0;
  return 1;
}

template <typename Scalar>
struct PreferenceFitConfig {
  Scalar sigma = Scalar(1e-2);
  Scalar lambda = Scalar(1e-6);
  VectorX<Scalar> g_weights;  // empty means all ones
};

template <typename Scalar>
struct PreferenceFit {
  RbfSurrogate<Scalar> surrogate;
  VectorX<Scalar> slacks;
  KktResiduals<Scalar> kkt;  // measured against the unshifted constraints
  int qp_iterations = 0;
};

/// Relative tightening applied to the preference margins while solving, so
/// that zero-slack constraints are satisfied strictly rather than at the
/// rounding boundary of π̂.
inline constexpr double kPreferenceMarginShift = 1e-8;

/// Preference QP: min (λ/2)βᵀβ + gᵀε over (β, ε) subject to one margin
/// constraint per comparison (two for ties) and ε ≥ 0.
template <typename Scalar>
PreferenceFit<Scalar> fit_preference_rbf(
    const RadialKernel<Scalar>& kernel, const MatrixX<Scalar>& centers,
    const std::vector<int>& preferences,
    const std::vector<std::pair<std::size_t, std::size_t>>& mapping,
    const PreferenceFitConfig<Scalar>& cfg,
    const QpSettings<Scalar>& qp_cfg = {}) {
  const Eigen::Index n = centers.rows();
  const auto m = static_cast<Eigen::Index>(preferences.size());
  if (m == 0) {
    throw Error(ErrorCode::invalid_argument,
                "preference fitting needs at least one preference");
  }
  if (static_cast<Eigen::Index>(mapping.size()) != m) {
    throw Error(ErrorCode::invalid_argument,
                "one index pair per preference is required");
  }
  if (!(cfg.sigma > Scalar(0))) {
    throw Error(ErrorCode::invalid_argument, "sigma must be positive");
  }
  if (!(cfg.lambda > Scalar(0))) {
    throw Error(ErrorCode::invalid_argument,
                "lambda must be positive (the LP case is not supported)");
  }
  VectorX<Scalar> g = cfg.g_weights.size() ? cfg.g_weights
                                           : VectorX<Scalar>::Ones(m).eval();
  if (g.size() != m || (g.array() <= Scalar(0)).any()) {
    throw Error(ErrorCode::invalid_argument,
                "g must hold one strictly positive weight per preference");
  }

  const MatrixX<Scalar> phi = build_phi_matrix(kernel, centers);
  Eigen::Index rows = m;
  for (int b : preferences) rows += (b == 0) ? 2 : 1;

  const Eigen::Index dim = n + m;
  MatrixX<Scalar> P = MatrixX<Scalar>::Zero(dim, dim);
  P.topLeftCorner(n, n).diagonal().setConstant(cfg.lambda);
  VectorX<Scalar> q = VectorX<Scalar>::Zero(dim);
  q.tail(m) = g;

  MatrixX<Scalar> G = MatrixX<Scalar>::Zero(rows, dim);
  VectorX<Scalar> h(rows);
  VectorX<Scalar> h_solve(rows);
  const Scalar shift = cfg.sigma * Scalar(kPreferenceMarginShift);
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto [l, c] = mapping[static_cast<std::size_t>(k)];
    if (l >= static_cast<std::size_t>(n) || c >= static_cast<std::size_t>(n)) {
      throw Error(ErrorCode::invalid_argument, "preference index out of range");
    }
    const VectorX<Scalar> diff =
        phi.row(static_cast<Eigen::Index>(l)) - phi.row(static_cast<Eigen::Index>(c));
    const int b = preferences[static_cast<std::size_t>(k)];
    auto add_row = [&](Scalar sign, Scalar rhs, Scalar rhs_solve) {
      G.row(r).head(n) = sign * diff.transpose();
      G(r, n + k) = Scalar(-1);
      h[r] = rhs;
      h_solve[r] = rhs_solve;
      ++r;
    };
    if (b == -1) {
      add_row(Scalar(1), -cfg.sigma, -cfg.sigma - shift);
    } else if (b == 1) {
      add_row(Scalar(-1), -cfg.sigma, -cfg.sigma - shift);
    } else if (b == 0) {
      add_row(Scalar(1), cfg.sigma, cfg.sigma - shift);
      add_row(Scalar(-1), cfg.sigma, cfg.sigma - shift);
    } else {
      throw Error(ErrorCode::invalid_argument, "preference must be -1, 0 or 1");
    }
  }
  for (Eigen::Index k = 0; k < m; ++k, ++r) {
    G(r, n + k) = Scalar(-1);
    h[r] = Scalar(0);
    h_solve[r] = Scalar(0);
  }

  QpResult<Scalar> sol = solve_qp<Scalar>(P, q, G, h_solve, qp_cfg);
  PreferenceFit<Scalar> fit;
  fit.slacks = sol.v.tail(m).cwiseMax(Scalar(0));
  fit.kkt = kkt_residuals<Scalar>(P, q, G, h, sol.v, sol.multipliers);
  fit.qp_iterations = sol.iterations;
  fit.surrogate = RbfSurrogate<Scalar>(kernel, centers, sol.v.head(n));
  return fit;
}

}  // namespace gmrs
