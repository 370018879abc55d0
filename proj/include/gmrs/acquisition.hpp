#pragma once

#include "gmrs/domain.hpp"
#include "gmrs/types.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace gmrs {

template <typename Scalar>
struct RangeStats {
  Scalar min = 0;
  Scalar max = 0;
  Scalar delta = 1;
};

/// Min, max and spread of h over the points. A zero spread is replaced by
/// h_max when h_max ≠ 0 and by 1 otherwise.
template <typename Scalar, typename Fn, typename Points>
RangeStats<Scalar> rescale_stats(const Fn& h, const Points& points) {
  if (std::begin(points) == std::end(points)) {
    throw Error(ErrorCode::invalid_argument,
                "rescaling needs at least one point");
  }
  RangeStats<Scalar> s;
  s.min = std::numeric_limits<Scalar>::infinity();
  s.max = -std::numeric_limits<Scalar>::infinity();
  for (const auto& x : points) {
    const Scalar v = h(x);
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.delta = s.max - s.min;
  if (s.delta == Scalar(0)) s.delta = (s.max != Scalar(0)) ? s.max : Scalar(1);
  return s;
}

template <typename Scalar>
struct RescaleStats {
  RangeStats<Scalar> f;
  RangeStats<Scalar> z;
};

/// δ·(f̂(x) − f̂_min)/Δf + (1 − δ)·(z(x) − z_min)/Δz.
template <typename Scalar>
Scalar acquisition_from_values(Scalar fx, Scalar zx, const RescaleStats<Scalar>& s,
                               Scalar delta) {
  return delta * (fx - s.f.min) / s.f.delta +
         (Scalar(1) - delta) * (zx - s.z.min) / s.z.delta;
}

template <typename Scalar, typename Surrogate, typename Explore, typename Vector>
Scalar acquisition_value(const Surrogate& fhat, const Explore& z,
                         const RescaleStats<Scalar>& s, Scalar delta,
                         const Vector& x) {
  return acquisition_from_values<Scalar>(fhat(x), z(x), s, delta);
}

/// Weight of z in the equivalent unnormalized form f̂ + α·z (δ > 0).
template <typename Scalar>
Scalar equivalent_alpha(const RescaleStats<Scalar>& s, Scalar delta) {
  return (Scalar(1) - delta) / delta * s.f.delta / s.z.delta;
}

enum class AcquisitionKind { gmrs, fixed_alpha, glisp_like };

const char* to_string(AcquisitionKind k) noexcept;
AcquisitionKind parse_acquisition_kind(const std::string& s);

template <typename Scalar>
struct BaselineParams {
  Scalar alpha = Scalar(1);
  Scalar surrogate_spread = Scalar(1);  // ΔF̂ over the samples (glisp-like)
};

/// fixed-alpha: f̂(x) + α·z(x); glisp-like: f̂(x)/ΔF̂(X) + α·z(x).
template <typename Scalar>
Scalar baseline_from_values(AcquisitionKind kind, Scalar fx, Scalar zx,
                            const BaselineParams<Scalar>& p) {
  switch (kind) {
    case AcquisitionKind::fixed_alpha: return fx + p.alpha * zx;
    case AcquisitionKind::glisp_like:
      return fx / p.surrogate_spread + p.alpha * zx;
    case AcquisitionKind::gmrs: break;
  }
  throw Error(ErrorCode::invalid_argument, "not a baseline acquisition kind");
}

template <typename Scalar, typename Surrogate, typename Explore, typename Vector>
Scalar baseline_acquisition(AcquisitionKind kind, const Surrogate& fhat,
                            const Explore& z, const BaselineParams<Scalar>& p,
                            const Vector& x) {
  return baseline_from_values<Scalar>(kind, fhat(x), z(x), p);
}

/// Greedy δ-cycling state: the weight stays while the best sample improves
/// and advances cyclically otherwise.
class DeltaCycle {
 public:
  DeltaCycle() : DeltaCycle(std::vector<double>{0.95, 0.7, 0.35, 0.0}) {}
  explicit DeltaCycle(std::vector<double> values, std::size_t index = 0);

  double delta() const { return values_[index_]; }
  std::size_t index() const { return index_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool convergence_mode() const;

 private:
  std::vector<double> values_;
  std::size_t index_;
};

DeltaCycle cycle_step(const DeltaCycle& cycle, bool improved);

enum class AugmentStrategy { random_uniform, samples_plus_random };

const char* to_string(AugmentStrategy s) noexcept;
AugmentStrategy parse_augment_strategy(const std::string& s);

struct AugmentedSet {
  std::vector<Vec> points;
  std::size_t size() const { return points.size(); }
};

/// Random feasible points over Ω (plus the midpoints between the three most
/// spread samples, or the samples themselves, depending on strategy).
AugmentedSet build_augmented_set(const ConstraintSet& omega,
                                 const std::vector<Vec>& samples,
                                 AugmentStrategy strategy, std::size_t n_aug,
                                 Rng& rng);

/// Indices of up to three samples chosen by greedy farthest-point selection.
std::vector<std::size_t> most_spread_triple(const std::vector<Vec>& samples);

}  // namespace gmrs
