#pragma once

// Gaussian-process surrogates: exact regression for measured values and a
// Laplace-approximated probit model for pairwise preferences.

#include "gmrs/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

namespace gmrs {

/// k(xi, xj) = s²·exp(−‖xi − xj‖² / (2ℓ²)).
template <typename Scalar>
struct SquaredExponential {
  Scalar signal_var = Scalar(1);
  Scalar lengthscale = Scalar(0.5);

  template <typename A, typename B>
  Scalar operator()(const Eigen::MatrixBase<A>& xi,
                    const Eigen::MatrixBase<B>& xj) const {
    const Scalar d2 = (xi - xj).squaredNorm();
    return signal_var * std::exp(-d2 / (Scalar(2) * lengthscale * lengthscale));
  }

  /// Gram matrix over rows of X.
  MatrixX<Scalar> gram(const MatrixX<Scalar>& X) const {
    const Eigen::Index n = X.rows();
    MatrixX<Scalar> K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      K(i, i) = signal_var;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        K(i, j) = K(j, i) = (*this)(X.row(i), X.row(j));
      }
    }
    return K;
  }

  /// Kernel vector k(x) against rows of X.
  template <typename Derived>
  VectorX<Scalar> cross(const MatrixX<Scalar>& X,
                        const Eigen::MatrixBase<Derived>& x) const {
    VectorX<Scalar> k(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      k[i] = (*this)(X.row(i), x.transpose());
    }
    return k;
  }
};

template <typename Scalar>
struct PredictiveDistribution {
  Scalar mean = 0;
  Scalar variance = 0;      // clamped at zero
  Scalar raw_variance = 0;  // before clamping
  bool clamped() const { return raw_variance < Scalar(0); }
};

namespace detail {

/// Cholesky with the jitter ladder 0, 1e-10, …, 1e-6 (relative to the mean
/// diagonal). Returns the jitter that succeeded.
template <typename Scalar>
Scalar robust_llt(const MatrixX<Scalar>& A, Eigen::LLT<MatrixX<Scalar>>& llt) {
  const Scalar scale =
      A.rows() ? std::max(A.diagonal().mean(), Scalar(1e-300)) : Scalar(1);
  llt.compute(A);
  if (llt.info() == Eigen::Success) return Scalar(0);
  for (Scalar j = Scalar(1e-10); j <= Scalar(1.5e-6); j *= Scalar(10)) {
    MatrixX<Scalar> B = A;
    B.diagonal().array() += j * scale;
    llt.compute(B);
    if (llt.info() == Eigen::Success) return j * scale;
  }
  throw Error(ErrorCode::singular_system,
              "covariance matrix is not positive definite after jitter "
              "escalation to 1e-6");
}

template <typename Scalar>
Scalar log_normal_cdf(Scalar z) {
  if (z > Scalar(-30)) return std::log(Scalar(0.5) * std::erfc(-z / std::numbers::sqrt2_v<Scalar>));
  // Asymptotic expansion in the far left tail.
  const Scalar z2 = z * z;
  return -Scalar(0.5) * z2 - std::log(-z) -
         Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) +
         std::log(Scalar(1) - Scalar(1) / z2 + Scalar(3) / (z2 * z2));
}

/// φ(z)/Φ(z), stable for very negative z.
template <typename Scalar>
Scalar normal_hazard(Scalar z) {
  if (z > Scalar(-30)) {
    const Scalar pdf = std::exp(-Scalar(0.5) * z * z) /
                       std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
    return pdf / (Scalar(0.5) * std::erfc(-z / std::numbers::sqrt2_v<Scalar>));
  }
  const Scalar z2 = z * z;
  return -z / (Scalar(1) - Scalar(1) / z2 + Scalar(3) / (z2 * z2));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Black-box regression

template <typename Scalar>
class GpBlackboxModel {
 public:
  GpBlackboxModel(SquaredExponential<Scalar> kernel, MatrixX<Scalar> X,
                  VectorX<Scalar> y, Scalar noise_var)
      : kernel_(kernel), X_(std::move(X)), y_(std::move(y)), noise_var_(noise_var) {
    if (X_.rows() == 0 || X_.rows() != y_.size()) {
      throw Error(ErrorCode::invalid_argument,
                  "GP regression needs N >= 1 inputs with one target each");
    }
    if (noise_var_ < Scalar(0)) {
      throw Error(ErrorCode::invalid_argument, "noise variance must be >= 0");
    }
    MatrixX<Scalar> A = kernel_.gram(X_);
    A.diagonal().array() += noise_var_;
    jitter_ = detail::robust_llt(A, llt_);
    alpha_ = llt_.solve(y_);
  }

  template <typename Derived>
  PredictiveDistribution<Scalar> predict(const Eigen::MatrixBase<Derived>& x) const {
    const VectorX<Scalar> k = kernel_.cross(X_, x);
    PredictiveDistribution<Scalar> p;
    p.mean = k.dot(alpha_);
    const VectorX<Scalar> v = llt_.matrixL().solve(k);
    p.raw_variance = kernel_.signal_var - v.squaredNorm();
    p.variance = std::max(p.raw_variance, Scalar(0));
    return p;
  }

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
    return kernel_.cross(X_, x).dot(alpha_);
  }

  /// Exact Gaussian log evidence log p(y | X).
  Scalar log_marginal_likelihood() const {
    Scalar logdet = 0;
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
      logdet += std::log(llt_.matrixLLT()(i, i));
    }
    return -Scalar(0.5) * y_.dot(alpha_) - logdet -
           Scalar(0.5) * Scalar(X_.rows()) *
               std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
  }

  const SquaredExponential<Scalar>& kernel() const { return kernel_; }
  const MatrixX<Scalar>& inputs() const { return X_; }
  const VectorX<Scalar>& targets() const { return y_; }
  const VectorX<Scalar>& weights() const { return alpha_; }
  Scalar noise_var() const { return noise_var_; }
  Scalar jitter() const { return jitter_; }

 private:
  SquaredExponential<Scalar> kernel_;
  MatrixX<Scalar> X_;
  VectorX<Scalar> y_;
  Scalar noise_var_;
  Scalar jitter_ = 0;
  Eigen::LLT<MatrixX<Scalar>> llt_;
  VectorX<Scalar> alpha_;
};

template <typename Scalar>
GpBlackboxModel<Scalar> gp_fit_blackbox(const SquaredExponential<Scalar>& kernel,
                                        const MatrixX<Scalar>& X,
                                        const VectorX<Scalar>& y,
                                        Scalar noise_var) {
  return GpBlackboxModel<Scalar>(kernel, X, y, noise_var);
}

template <typename Scalar, typename Derived>
PredictiveDistribution<Scalar> gp_predict_blackbox(
    const GpBlackboxModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  return model.predict(x);
}

// ---------------------------------------------------------------------------
// Preference learning (probit likelihood, Laplace approximation)

/// Strict comparison: inputs row `winner` is preferred to row `loser`.
struct StrictPair {
  std::size_t winner;
  std::size_t loser;
};

template <typename Scalar>
struct ProbitTerms {
  Scalar log_likelihood = 0;
  VectorX<Scalar> gradient;  // ∇_f log p(D|f)
  MatrixX<Scalar> hessian;   // −∇²_f log p(D|f), i.e. Λ
};

/// log p(D|f) = Σ log Φ((f_loser − f_winner)/(√2·σ)) with derivatives.
template <typename Scalar>
ProbitTerms<Scalar> probit_terms(const VectorX<Scalar>& f,
                                 const std::vector<StrictPair>& pairs,
                                 Scalar noise_std, bool with_hessian = true) {
  const Scalar s = std::numbers::sqrt2_v<Scalar> * noise_std;
  ProbitTerms<Scalar> t;
  t.gradient = VectorX<Scalar>::Zero(f.size());
  if (with_hessian) t.hessian = MatrixX<Scalar>::Zero(f.size(), f.size());
  for (const auto& p : pairs) {
    const auto w = static_cast<Eigen::Index>(p.winner);
    const auto l = static_cast<Eigen::Index>(p.loser);
    const Scalar z = (f[l] - f[w]) / s;
    t.log_likelihood += detail::log_normal_cdf(z);
    const Scalar r = detail::normal_hazard(z);
    t.gradient[l] += r / s;
    t.gradient[w] -= r / s;
    if (with_hessian) {
      const Scalar c = r * (z + r) / (s * s);
      t.hessian(l, l) += c;
      t.hessian(w, w) += c;
      t.hessian(l, w) -= c;
      t.hessian(w, l) -= c;
    }
  }
  return t;
}

/// −log p(D|f) + ½fᵀK⁻¹f, evaluated with an explicit solve (test helper
/// and reference for the Newton iteration).
template <typename Scalar>
Scalar preference_neg_log_posterior(const MatrixX<Scalar>& K,
                                    const std::vector<StrictPair>& pairs,
                                    Scalar noise_std, const VectorX<Scalar>& f) {
  const VectorX<Scalar> a = K.llt().solve(f);
  return -probit_terms(f, pairs, noise_std, false).log_likelihood +
         Scalar(0.5) * f.dot(a);
}

template <typename Scalar>
VectorX<Scalar> preference_neg_log_posterior_gradient(
    const MatrixX<Scalar>& K, const std::vector<StrictPair>& pairs,
    Scalar noise_std, const VectorX<Scalar>& f) {
  return K.llt().solve(f) - probit_terms(f, pairs, noise_std, false).gradient;
}

struct NewtonSettings {
  double grad_tol = 1e-6;
  int max_iter = 100;
  int max_halvings = 30;
};

template <typename Scalar>
class GpPreferenceModel {
 public:
  GpPreferenceModel(SquaredExponential<Scalar> kernel, MatrixX<Scalar> X,
                    std::vector<StrictPair> pairs, Scalar noise_std,
                    const NewtonSettings& newton = {})
      : kernel_(kernel), X_(std::move(X)), pairs_(std::move(pairs)), noise_std_(noise_std) {
    const Eigen::Index n = X_.rows();
    if (pairs_.empty()) {
      throw Error(ErrorCode::invalid_argument,
                  "preference GP needs at least one strict preference");
    }
    if (!(noise_std_ > Scalar(0))) {
      throw Error(ErrorCode::invalid_argument, "noise_std must be positive");
    }
    for (const auto& p : pairs_) {
      if (p.winner >= static_cast<std::size_t>(n) ||
          p.loser >= static_cast<std::size_t>(n) || p.winner == p.loser) {
        throw Error(ErrorCode::invalid_argument, "invalid preference pair");
      }
    }
    K_ = kernel_.gram(X_);
    Eigen::LLT<MatrixX<Scalar>> llt;
    jitter_ = detail::robust_llt(K_, llt);
    K_.diagonal().array() += jitter_;
    solve_map(newton);
  }

  template <typename Derived>
  PredictiveDistribution<Scalar> predict(const Eigen::MatrixBase<Derived>& x) const {
    const VectorX<Scalar> k = kernel_.cross(X_, x);
    PredictiveDistribution<Scalar> p;
    p.mean = k.dot(alpha_);
    p.raw_variance = kernel_.signal_var - k.dot(C_ * k);
    p.variance = std::max(p.raw_variance, Scalar(0));
    return p;
  }

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
    return kernel_.cross(X_, x).dot(alpha_);
  }

  /// Laplace evidence: log p(D|f_MAP) − ½f_MAPᵀK⁻¹f_MAP − ½log det(I + KΛ).
  Scalar log_marginal_likelihood() const {
    const Eigen::Index n = X_.rows();
    MatrixX<Scalar> B = MatrixX<Scalar>::Identity(n, n) + K_ * lambda_;
    Eigen::PartialPivLU<MatrixX<Scalar>> lu(B);
    Scalar logdet = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      logdet += std::log(std::abs(lu.matrixLU()(i, i)));
    }
    return log_likelihood_ - Scalar(0.5) * f_map_.dot(alpha_) -
           Scalar(0.5) * logdet;
  }

  const SquaredExponential<Scalar>& kernel() const { return kernel_; }
  const MatrixX<Scalar>& inputs() const { return X_; }
  const std::vector<StrictPair>& pairs() const { return pairs_; }
  Scalar noise_std() const { return noise_std_; }
  const MatrixX<Scalar>& gram() const { return K_; }
  const VectorX<Scalar>& f_map() const { return f_map_; }
  const VectorX<Scalar>& weights() const { return alpha_; }
  const MatrixX<Scalar>& lambda_map() const { return lambda_; }
  /// (I + Λ_MAP·K)⁻¹Λ_MAP, equal to [K + Λ_MAP⁻¹]⁻¹ when Λ_MAP is invertible.
  const MatrixX<Scalar>& variance_operator() const { return C_; }
  Scalar gradient_norm() const { return grad_norm_; }
  int newton_iterations() const { return iterations_; }
  Scalar jitter() const { return jitter_; }
  /// Negative log posterior after each accepted Newton step.
  const std::vector<Scalar>& objective_trace() const { return trace_; }

 private:
  Scalar objective(const VectorX<Scalar>& f, const VectorX<Scalar>& a) const {
    return -probit_terms(f, pairs_, noise_std_, false).log_likelihood +
           Scalar(0.5) * f.dot(a);
  }

  void solve_map(const NewtonSettings& cfg) {
    const Eigen::Index n = X_.rows();
    VectorX<Scalar> f = VectorX<Scalar>::Zero(n);
    VectorX<Scalar> a = VectorX<Scalar>::Zero(n);
    Scalar psi = objective(f, a);
    trace_.push_back(psi);
    ProbitTerms<Scalar> t = probit_terms(f, pairs_, noise_std_);
    grad_norm_ = (a - t.gradient).cwiseAbs().maxCoeff();

    int iter = 0;
    while (grad_norm_ > Scalar(cfg.grad_tol)) {
      if (iter == cfg.max_iter) {
        std::ostringstream msg;
        msg << "Laplace MAP search did not converge in " << cfg.max_iter
            << " Newton iterations (gradient norm " << grad_norm_ << ")";
        throw Error(ErrorCode::not_converged, msg.str());
      }
      ++iter;
      // Newton target: f⁺ = K(I + ΛK)⁻¹(Λf + ∇log p), with K⁻¹f⁺ = c.
      const MatrixX<Scalar> B = MatrixX<Scalar>::Identity(n, n) + t.hessian * K_;
      const VectorX<Scalar> c =
          B.partialPivLu().solve(t.hessian * f + t.gradient);
      const VectorX<Scalar> df = K_ * c - f;
      const VectorX<Scalar> da = c - a;

      Scalar step = 1;
      bool accepted = false;
      for (int k = 0; k <= cfg.max_halvings; ++k, step *= Scalar(0.5)) {
        const VectorX<Scalar> f_try = f + step * df;
        const VectorX<Scalar> a_try = a + step * da;
        const Scalar psi_try = objective(f_try, a_try);
        if (psi_try <= psi) {
          f = f_try;
          a = a_try;
          psi = psi_try;
          accepted = true;
          break;
        }
      }
      t = probit_terms(f, pairs_, noise_std_);
      grad_norm_ = (a - t.gradient).cwiseAbs().maxCoeff();
      if (!accepted) break;
      trace_.push_back(psi);
    }
    if (grad_norm_ > Scalar(cfg.grad_tol)) {
      std::ostringstream msg;
      msg << "Laplace MAP line search stalled (gradient norm " << grad_norm_
          << ")";
      throw Error(ErrorCode::not_converged, msg.str());
    }
    iterations_ = iter;
    f_map_ = f;
    alpha_ = a;
    lambda_ = t.hessian;
    log_likelihood_ = t.log_likelihood;

    const MatrixX<Scalar> B = MatrixX<Scalar>::Identity(n, n) + lambda_ * K_;
    MatrixX<Scalar> C = B.partialPivLu().solve(lambda_);
    C_ = Scalar(0.5) * (C + C.transpose());
  }

  SquaredExponential<Scalar> kernel_;
  MatrixX<Scalar> X_;
  std::vector<StrictPair> pairs_;
  Scalar noise_std_;
  MatrixX<Scalar> K_;
  Scalar jitter_ = 0;
  VectorX<Scalar> f_map_;
  VectorX<Scalar> alpha_;
  MatrixX<Scalar> lambda_;
  MatrixX<Scalar> C_;
  Scalar log_likelihood_ = 0;
  Scalar grad_norm_ = 0;
  int iterations_ = 0;
  std::vector<Scalar> trace_;
};

template <typename Scalar>
GpPreferenceModel<Scalar> gp_fit_preference(const SquaredExponential<Scalar>& kernel,
                                            const MatrixX<Scalar>& X,
                                            const std::vector<StrictPair>& pairs,
                                            Scalar noise_std) {
  return GpPreferenceModel<Scalar>(kernel, X, pairs, noise_std);
}

template <typename Scalar, typename Derived>
PredictiveDistribution<Scalar> gp_predict_preference(
    const GpPreferenceModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  return model.predict(x);
}

template <typename Model>
auto log_marginal_likelihood(const Model& model) {
  return model.log_marginal_likelihood();
}

/// Strict pairs from (b, ℓ, κ) triples; ties carry no strict information and
/// are skipped.
inline std::vector<StrictPair> strict_pairs(
    const std::vector<int>& preferences,
    const std::vector<std::pair<std::size_t, std::size_t>>& mapping) {
  std::vector<StrictPair> out;
  for (std::size_t h = 0; h < preferences.size(); ++h) {
    const auto [l, k] = mapping.at(h);
    if (preferences[h] == -1) out.push_back({l, k});
    if (preferences[h] == 1) out.push_back({k, l});
  }
  return out;
}

}  // namespace gmrs
