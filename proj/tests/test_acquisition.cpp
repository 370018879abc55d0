#include "gmrs/acquisition.hpp"

#include <doctest.h>

#include <random>

using namespace gmrs;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

template <typename Fn>
std::size_t argmin(const std::vector<Vec>& pts, Fn&& fn) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (fn(pts[i]) < fn(pts[best])) best = i;
  }
  return best;
}

}  // namespace

TEST_CASE("rescale statistics and degenerate spreads") {
  std::vector<Vec> pts{v1(2), v1(4)};
  auto id = [](const Vec& x) { return x[0]; };
  auto s = rescale_stats<double>(id, pts);
  CHECK(s.min == 2);
  CHECK(s.max == 4);
  CHECK(s.delta == 2);

  s = rescale_stats<double>([](const Vec&) { return 5.0; }, pts);
  CHECK(s.delta == 5);
  s = rescale_stats<double>([](const Vec&) { return -3.0; }, pts);
  CHECK(s.delta == -3);
  s = rescale_stats<double>([](const Vec&) { return 0.0; }, pts);
  CHECK(s.delta == 1);
  CHECK_THROWS_AS(rescale_stats<double>(id, std::vector<Vec>{}), Error);
}

TEST_CASE("acquisition endpoints") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Vec> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(v1(u(rng)));
  auto f = [](const Vec& x) { return std::sin(7 * x[0]); };
  auto z = [](const Vec& x) { return -std::abs(x[0] - 0.3); };
  RescaleStats<double> s{rescale_stats<double>(f, pts), rescale_stats<double>(z, pts)};

  auto a0 = [&](const Vec& x) { return acquisition_value(f, z, s, 0.0, x); };
  auto a1 = [&](const Vec& x) { return acquisition_value(f, z, s, 1.0, x); };
  CHECK(argmin(pts, a0) == argmin(pts, z));
  CHECK(argmin(pts, a1) == argmin(pts, f));
  for (const auto& x : pts) {
    for (double d : {0.0, 0.3, 1.0}) {
      const double a = acquisition_value(f, z, s, d, x);
      CHECK(a >= -1e-15);
      CHECK(a <= 1 + 1e-15);
    }
  }
  // a point attaining both minima
  auto g = [](const Vec& x) { return x[0]; };
  RescaleStats<double> sg{rescale_stats<double>(g, pts), rescale_stats<double>(g, pts)};
  const Vec lo = pts[argmin(pts, g)];
  for (double d : {0.0, 0.5, 1.0}) CHECK(acquisition_value(g, g, sg, d, lo) == 0);
}

TEST_CASE("normalized and unnormalized forms share the minimizer") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<Vec> cand;
    for (int i = 0; i < 100; ++i) {
      Vec x(2);
      x << u(rng), u(rng);
      cand.push_back(x);
    }
    const double a = u(rng), b = u(rng);
    auto f = [&](const Vec& x) { return std::cos(3 * x[0] + a) + x[1] * b; };
    auto z = [&](const Vec& x) { return -std::abs(x[0] * x[1] - a); };
    RescaleStats<double> s{rescale_stats<double>(f, cand), rescale_stats<double>(z, cand)};
    for (double d : {0.25, 0.5, 0.95}) {
      const double alpha = equivalent_alpha(s, d);
      const auto i17 = argmin(cand, [&](const Vec& x) { return acquisition_value(f, z, s, d, x); });
      const auto i23 = argmin(cand, [&](const Vec& x) { return f(x) + alpha * z(x); });
      CHECK(i17 == i23);
    }
  }
}

TEST_CASE("baseline shapes") {
  auto f = [](const Vec& x) { return x[0] * x[0]; };
  auto z = [](const Vec& x) { return -x[0]; };
  const Vec x = v1(0.5);
  BaselineParams<double> p;
  p.alpha = 0;
  CHECK(baseline_acquisition(AcquisitionKind::fixed_alpha, f, z, p, x) == 0.25);
  p.alpha = 2;
  auto zero = [](const Vec&) { return 0.0; };
  CHECK(baseline_acquisition(AcquisitionKind::fixed_alpha, zero, z, p, x) == -1.0);

  // ΔF̂ over three samples {0, 1, 2}: f̂ = {0, 1, 4}, spread 4.
  std::vector<Vec> samples{v1(0), v1(1), v1(2)};
  p.surrogate_spread = rescale_stats<double>(f, samples).delta;
  CHECK(p.surrogate_spread == 4);
  CHECK(baseline_acquisition(AcquisitionKind::glisp_like, f, z, p, x) ==
        doctest::Approx(0.25 / 4 - 2 * 0.5));
  CHECK_THROWS_AS(baseline_from_values<double>(AcquisitionKind::gmrs, 1, 1, p), Error);
}

TEST_CASE("greedy delta cycling") {
  DeltaCycle c;
  CHECK(c.delta() == 0.95);
  CHECK(c.convergence_mode());
  CHECK(cycle_step(c, false).delta() == 0.7);
  CHECK(cycle_step(DeltaCycle({0.95, 0.7, 0.35, 0}, 3), false).index() == 0);
  CHECK(cycle_step(DeltaCycle({0.95, 0.7, 0.35, 0}, 1), true).delta() == 0.7);
  CHECK_FALSE(DeltaCycle({0.5, 0.9}).convergence_mode());
  CHECK_THROWS_AS(DeltaCycle(std::vector<double>{}), Error);
  CHECK_THROWS_AS(DeltaCycle({1.2}), Error);
  CHECK_THROWS_AS(DeltaCycle({0.5}, 1), Error);
}

TEST_CASE("scripted improvement sequences give the expected delta trace") {
  const std::vector<double> values{0.95, 0.7, 0.35, 0};
  const std::vector<bool> improved{true, false, false, true, false, false, false, true, false};
  const std::vector<double> expected{0.95, 0.7, 0.35, 0.35, 0, 0.95, 0.7, 0.7, 0.35};
  DeltaCycle c(values);
  std::size_t j = 0;
  for (std::size_t k = 0; k < improved.size(); ++k) {
    c = cycle_step(c, improved[k]);
    j = improved[k] ? j : (j + 1) % values.size();
    CHECK(c.index() == j);
    CHECK(c.delta() == expected[k]);
  }
}

TEST_CASE("augmented set") {
  Vec lo = Vec::Zero(2), hi = Vec::Ones(2);
  ConstraintSet box(lo, hi);
  std::vector<Vec> samples{Vec::Constant(2, 0.1), Vec::Constant(2, 0.9), Vec::Zero(2)};
  samples[2] << 0.9, 0.1;
  Rng a(5), b(5);
  const auto s1 = build_augmented_set(box, samples, AugmentStrategy::random_uniform, 64, a);
  const auto s2 = build_augmented_set(box, samples, AugmentStrategy::random_uniform, 64, b);
  CHECK(s1.size() >= 64);
  REQUIRE(s1.size() == s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(box.contains(s1.points[i]));
    CHECK(s1.points[i] == s2.points[i]);
  }

  ConstraintSet half(lo, hi);
  Mat A(1, 2);
  A << 1, 1;
  half.with_linear_ineq(A, Vec::Constant(1, 1.0));
  const auto s3 = build_augmented_set(half, samples, AugmentStrategy::random_uniform, 64, a);
  for (const auto& x : s3.points) CHECK(half.contains(x));

  const auto s4 = build_augmented_set(box, samples, AugmentStrategy::samples_plus_random, 10, a);
  CHECK(s4.size() == 13);

  ConstraintSet empty(lo, hi);
  empty.with_linear_ineq(A, Vec::Constant(1, -1.0));
  CHECK_THROWS_AS(build_augmented_set(empty, samples, AugmentStrategy::random_uniform, 8, a),
                  Error);
}
