#include "gmrs/acquisition.hpp"

#include <random>

namespace gmrs {

const char* to_string(AcquisitionKind k) noexcept {
  switch (k) {
    case AcquisitionKind::gmrs: return "gmrs";
    case AcquisitionKind::fixed_alpha: return "fixed-alpha";
    case AcquisitionKind::glisp_like: return "glisp-like";
  }
  return "unknown";
}

AcquisitionKind parse_acquisition_kind(const std::string& s) {
  if (s == "gmrs") return AcquisitionKind::gmrs;
  if (s == "fixed-alpha" || s == "glis-like") return AcquisitionKind::fixed_alpha;
  if (s == "glisp-like") return AcquisitionKind::glisp_like;
  throw Error(ErrorCode::invalid_argument, "unknown acquisition kind '" + s + "'");
}

DeltaCycle::DeltaCycle(std::vector<double> values, std::size_t index)
    : values_(std::move(values)), index_(index) {
  if (values_.empty()) {
    throw Error(ErrorCode::invalid_argument, "the delta cycle needs an entry");
  }
  for (double d : values_) {
    if (!(d >= 0.0 && d <= 1.0)) {
      throw Error(ErrorCode::invalid_argument,
                  "delta cycle entries must lie in [0, 1]");
    }
  }
  if (index_ >= values_.size()) {
    throw Error(ErrorCode::invalid_argument, "delta cycle index out of range");
  }
}

bool DeltaCycle::convergence_mode() const {
  return std::find(values_.begin(), values_.end(), 0.0) != values_.end();
}

DeltaCycle cycle_step(const DeltaCycle& cycle, bool improved) {
  if (improved) return cycle;
  return DeltaCycle(cycle.values(), (cycle.index() + 1) % cycle.size());
}

const char* to_string(AugmentStrategy s) noexcept {
  return s == AugmentStrategy::random_uniform ? "random-uniform"
                                              : "samples-plus-random";
}

AugmentStrategy parse_augment_strategy(const std::string& s) {
  if (s == "random-uniform") return AugmentStrategy::random_uniform;
  if (s == "samples-plus-random") return AugmentStrategy::samples_plus_random;
  throw Error(ErrorCode::invalid_argument, "unknown X_aug strategy '" + s + "'");
}

std::vector<std::size_t> most_spread_triple(const std::vector<Vec>& samples) {
  std::vector<std::size_t> chosen;
  if (samples.empty()) return chosen;
  Vec centroid = Vec::Zero(samples.front().size());
  for (const auto& x : samples) centroid += x;
  centroid /= static_cast<double>(samples.size());

  auto farthest_from = [&](auto&& dist) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double d = dist(samples[i]);
      if (d > best) {
        best = d;
        arg = i;
      }
    }
    return arg;
  };
  chosen.push_back(
      farthest_from([&](const Vec& x) { return (x - centroid).squaredNorm(); }));
  while (chosen.size() < std::min<std::size_t>(3, samples.size())) {
    chosen.push_back(farthest_from([&](const Vec& x) {
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t c : chosen) d = std::min(d, (x - samples[c]).squaredNorm());
      return d;
    }));
  }
  return chosen;
}

AugmentedSet build_augmented_set(const ConstraintSet& omega,
                                 const std::vector<Vec>& samples,
                                 AugmentStrategy strategy, std::size_t n_aug,
                                 Rng& rng) {
  if (samples.empty()) {
    throw Error(ErrorCode::invalid_argument,
                "the augmented set needs at least one sample");
  }
  if (n_aug < 2) {
    throw Error(ErrorCode::invalid_argument, "N_aug must be at least 2");
  }
  AugmentedSet out;
  out.points.reserve(n_aug + samples.size() + 3);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t max_draws = 100 * n_aug;
  std::size_t draws = 0;
  Vec u(omega.dim());
  while (out.points.size() < n_aug) {
    if (draws++ == max_draws) {
      throw Error(ErrorCode::infeasible,
                  "could not place N_aug feasible points in 100*N_aug draws");
    }
    for (Eigen::Index d = 0; d < u.size(); ++d) u[d] = unit(rng);
    Vec x = omega.from_unit(u);
    if (omega.contains(x)) out.points.push_back(std::move(x));
  }

  if (strategy == AugmentStrategy::random_uniform) {
    const auto idx = most_spread_triple(samples);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        Vec mid = 0.5 * (samples[idx[a]] + samples[idx[b]]);
        if (omega.contains(mid)) out.points.push_back(std::move(mid));
      }
    }
  } else {
    for (const auto& x : samples) out.points.push_back(x);
  }
  return out;
}

}  // namespace gmrs
