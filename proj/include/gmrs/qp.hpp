#pragma once

// Dense convex QP solver:  min ½vᵀPv + qᵀv  s.t.  Gv ≤ h.
//
// Mehrotra predictor-corrector interior point iteration, followed by an
// active-set polish that solves the reduced KKT system on the constraints
// the interior iterate identified as binding. The polish makes inactive
// slacks exactly zero instead of O(μ).

#include "gmrs/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gmrs {

template <typename Scalar>
struct KktResiduals {
  Scalar stationarity = 0;     // ‖Pv + q + Gᵀμ‖∞
  Scalar primal = 0;           // ‖max(Gv − h, 0)‖∞
  Scalar dual = 0;             // ‖min(μ, 0)‖∞
  Scalar complementarity = 0;  // ‖μ ∘ (h − Gv)‖∞

  Scalar max() const {
    return std::max({stationarity, primal, dual, complementarity});
  }
};

template <typename Scalar>
struct QpSettings {
  Scalar tol = Scalar(1e-10);        // interior point stopping tolerance
  Scalar kkt_tol = Scalar(1e-6);     // acceptance threshold on the residuals
  Scalar step_fraction = Scalar(0.99);
  int max_iter = 200;
  bool polish = true;
};

template <typename Scalar>
struct QpResult {
  VectorX<Scalar> v;
  VectorX<Scalar> multipliers;  // one per row of G, ≥ 0 at optimum
  KktResiduals<Scalar> kkt;
  Scalar objective = 0;
  int iterations = 0;
  bool polished = false;
};

/// Solver failure carrying the residuals of the last iterate.
class QpError : public Error {
 public:
  QpError(ErrorCode code, const std::string& what, double residual)
      : Error(code, what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

template <typename Scalar>
KktResiduals<Scalar> kkt_residuals(const MatrixX<Scalar>& P,
                                   const VectorX<Scalar>& q,
                                   const MatrixX<Scalar>& G,
                                   const VectorX<Scalar>& h,
                                   const VectorX<Scalar>& v,
                                   const VectorX<Scalar>& mu) {
  KktResiduals<Scalar> r;
  VectorX<Scalar> grad = P * v + q;
  if (G.rows() > 0) grad.noalias() += G.transpose() * mu;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : Scalar(0);
  if (G.rows() > 0) {
    const VectorX<Scalar> slack = h - G * v;
    r.primal = (-slack).cwiseMax(Scalar(0)).maxCoeff();
    r.dual = (-mu).cwiseMax(Scalar(0)).maxCoeff();
    r.complementarity = mu.cwiseProduct(slack).cwiseAbs().maxCoeff();
  }
  return r;
}

namespace detail {

template <typename Scalar>
Scalar inf_norm(const VectorX<Scalar>& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : Scalar(0);
}

// Solve the equality-constrained subproblem on the guessed active set.
template <typename Scalar>
bool polish_qp(const MatrixX<Scalar>& P, const VectorX<Scalar>& q,
               const MatrixX<Scalar>& G, const VectorX<Scalar>& h,
               const VectorX<Scalar>& slack, const VectorX<Scalar>& z,
               QpResult<Scalar>& out) {
  const Eigen::Index n = P.rows();
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    if (slack[i] < z[i]) active.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(active.size());
  const Scalar reg = Scalar(1e-9);

  MatrixX<Scalar> kkt = MatrixX<Scalar>::Zero(n + m, n + m);
  VectorX<Scalar> rhs(n + m);
  kkt.topLeftCorner(n, n) = P;
  rhs.head(n) = -q;
  for (Eigen::Index k = 0; k < m; ++k) {
    kkt.block(n + k, 0, 1, n) = G.row(active[k]);
    kkt.block(0, n + k, n, 1) = G.row(active[k]).transpose();
    rhs[n + k] = h[active[k]];
  }
  MatrixX<Scalar> reg_kkt = kkt;
  reg_kkt.topLeftCorner(n, n).diagonal().array() += reg;
  reg_kkt.bottomRightCorner(m, m).diagonal().array() -= reg;
  Eigen::PartialPivLU<MatrixX<Scalar>> lu(reg_kkt);
  VectorX<Scalar> sol = lu.solve(rhs);
  for (int it = 0; it < 10; ++it) {
    const VectorX<Scalar> res = rhs - kkt * sol;
    if (inf_norm<Scalar>(res) < Scalar(1e-14)) break;
    sol += lu.solve(res);
  }
  if (!sol.allFinite()) return false;

  VectorX<Scalar> mu = VectorX<Scalar>::Zero(G.rows());
  for (Eigen::Index k = 0; k < m; ++k) mu[active[k]] = sol[n + k];
  const VectorX<Scalar> v = sol.head(n);
  out.v = v;
  out.multipliers = mu;
  out.kkt = kkt_residuals<Scalar>(P, q, G, h, v, mu);
  return true;
}

}  // namespace detail

template <typename Scalar>
QpResult<Scalar> solve_qp(const MatrixX<Scalar>& P, const VectorX<Scalar>& q,
                          const MatrixX<Scalar>& G, const VectorX<Scalar>& h,
                          const QpSettings<Scalar>& cfg = {}) {
  using detail::inf_norm;
  const Eigen::Index n = P.rows();
  const Eigen::Index m = G.rows();
  if (P.cols() != n || q.size() != n || (m > 0 && G.cols() != n) ||
      h.size() != m) {
    throw Error(ErrorCode::invalid_argument, "QP dimension mismatch");
  }

  auto finish = [&](QpResult<Scalar>& res, int iter) {
    res.iterations = iter;
    res.objective = Scalar(0.5) * res.v.dot(P * res.v) + q.dot(res.v);
    return res;
  };

  if (m == 0) {
    QpResult<Scalar> res;
    Eigen::LDLT<MatrixX<Scalar>> ldlt(P);
    res.v = ldlt.solve(-q);
    res.multipliers.resize(0);
    res.kkt = kkt_residuals<Scalar>(P, q, G, h, res.v, res.multipliers);
    if (!res.v.allFinite() || res.kkt.max() > cfg.kkt_tol) {
      throw QpError(ErrorCode::not_converged, "unconstrained QP is unbounded",
                    static_cast<double>(res.kkt.max()));
    }
    return finish(res, 0);
  }

  const Scalar scale_d = Scalar(1) + std::max(inf_norm<Scalar>(q), inf_norm<Scalar>(P.diagonal()));
  const Scalar scale_p = Scalar(1) + inf_norm<Scalar>(h);

  VectorX<Scalar> v = VectorX<Scalar>::Zero(n);
  VectorX<Scalar> s = (h - G * v).cwiseMax(Scalar(1));
  VectorX<Scalar> z = VectorX<Scalar>::Ones(m);

  auto max_step = [](const VectorX<Scalar>& x, const VectorX<Scalar>& dx) {
    Scalar a = 1;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (dx[i] < 0) a = std::min(a, -x[i] / dx[i]);
    }
    return a;
  };

  KktResiduals<Scalar> last{};
  int iterations = 0;
  Scalar best_merit = std::numeric_limits<Scalar>::infinity();
  int stalled = 0;
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    iterations = iter;
    const VectorX<Scalar> rd = P * v + q + G.transpose() * z;
    const VectorX<Scalar> rp = G * v + s - h;
    const Scalar mu = s.dot(z) / static_cast<Scalar>(m);
    last = kkt_residuals<Scalar>(P, q, G, h, v, z);
    if (inf_norm<Scalar>(rd) <= cfg.tol * scale_d &&
        inf_norm<Scalar>(rp) <= cfg.tol * scale_p && mu <= cfg.tol) {
      break;
    }
    // Stalled at rounding level.
    const Scalar merit = std::max(inf_norm<Scalar>(rd) / scale_d, inf_norm<Scalar>(rp) / scale_p);
    if (mu <= cfg.tol && merit >= Scalar(0.5) * best_merit && ++stalled >= 5) break;
    if (merit < Scalar(0.5) * best_merit) stalled = 0;
    best_merit = std::min(best_merit, merit);

    // Farkas certificate: a growing dual ray with Gᵀy ≈ 0 and hᵀy < 0.
    const Scalar zn = inf_norm<Scalar>(z);
    if (zn > Scalar(1e8)) {
      const VectorX<Scalar> y = z / zn;
      if (inf_norm<Scalar>(G.transpose() * y) <= Scalar(1e-6) &&
          h.dot(y) < -Scalar(1e-6)) {
        throw QpError(ErrorCode::infeasible, "QP is primal infeasible",
                      static_cast<double>(last.max()));
      }
    }

    const VectorX<Scalar> w = z.cwiseQuotient(s);
    MatrixX<Scalar> K = P;
    K.noalias() += G.transpose() * w.asDiagonal() * G;
    K.diagonal().array() += std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + K.diagonal().cwiseAbs().maxCoeff());
    const Eigen::LDLT<MatrixX<Scalar>> ldlt(K);
    if (ldlt.info() != Eigen::Success) break;

    // Newton system  P dv + Gᵀdz = r1,  G dv + ds = r2,  Z ds + S dz = r3,
    // solved through the normal equations plus refinement steps on the
    // unreduced residual (the reduced matrix is badly scaled near the end).
    auto direction = [&](const VectorX<Scalar>& r3, VectorX<Scalar>& dv,
                         VectorX<Scalar>& ds, VectorX<Scalar>& dz) {
      auto reduced = [&](const VectorX<Scalar>& r1, const VectorX<Scalar>& r2,
                         const VectorX<Scalar>& rc, VectorX<Scalar>& x,
                         VectorX<Scalar>& xs, VectorX<Scalar>& xz) {
        x = ldlt.solve(r1 + G.transpose() * (w.cwiseProduct(r2) - rc.cwiseQuotient(s)));
        xz = w.cwiseProduct(G * x - r2) + rc.cwiseQuotient(s);
        xs = (rc - s.cwiseProduct(xz)).cwiseQuotient(z);
      };
      const VectorX<Scalar> r1 = -rd;
      const VectorX<Scalar> r2 = -rp;
      reduced(r1, r2, r3, dv, ds, dz);
      for (int k = 0; k < 3; ++k) {
        const VectorX<Scalar> e1 = r1 - P * dv - G.transpose() * dz;
        const VectorX<Scalar> e2 = r2 - G * dv - ds;
        const VectorX<Scalar> e3 = r3 - z.cwiseProduct(ds) - s.cwiseProduct(dz);
        VectorX<Scalar> cv, cs, cz;
        reduced(e1, e2, e3, cv, cs, cz);
        dv += cv;
        ds += cs;
        dz += cz;
      }
    };

    VectorX<Scalar> dv, ds, dz;
    const VectorX<Scalar> rc_aff = -s.cwiseProduct(z);
    direction(rc_aff, dv, ds, dz);
    const Scalar a_aff = std::min(max_step(s, ds), max_step(z, dz));
    const Scalar mu_aff =
        (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<Scalar>(m);
    const Scalar centering = std::pow(mu_aff / mu, Scalar(3));

    const VectorX<Scalar> rc =
        rc_aff - ds.cwiseProduct(dz) + VectorX<Scalar>::Constant(m, centering * mu);
    direction(rc, dv, ds, dz);
    const Scalar a = std::min(Scalar(1), cfg.step_fraction *
                                             std::min(max_step(s, ds), max_step(z, dz)));
    v += a * dv;
    s += a * ds;
    z += a * dz;
    if (!v.allFinite() || !s.allFinite() || !z.allFinite()) break;
  }

  // Either converged or stalled at rounding level; accept what meets the
  // residual threshold, preferring the polished point.
  if (cfg.polish) {
    QpResult<Scalar> polished;
    if (detail::polish_qp<Scalar>(P, q, G, h, s, z, polished) &&
        polished.kkt.max() <= cfg.kkt_tol) {
      polished.polished = true;
      return finish(polished, iterations);
    }
  }
  last = kkt_residuals<Scalar>(P, q, G, h, v, z);
  if (last.max() <= cfg.kkt_tol) {
    QpResult<Scalar> res;
    res.v = v;
    res.multipliers = z;
    res.kkt = last;
    return finish(res, iterations);
  }

  std::ostringstream msg;
  msg << "QP did not converge; stationarity=" << last.stationarity
      << " primal=" << last.primal << " dual=" << last.dual
      << " complementarity=" << last.complementarity;
  throw QpError(ErrorCode::not_converged, msg.str(),
                static_cast<double>(last.max()));
}

}  // namespace gmrs
