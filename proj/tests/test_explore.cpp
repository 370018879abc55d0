#include "gmrs/explore.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace gmrs;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("idw distance values") {
  Mat X = v2(0, 0).transpose();
  CHECK(idw_distance<double>(X, v2(0, 0)) == 0);
  CHECK(idw_distance<double>(X, v2(1, 0)) == doctest::Approx(-0.5).epsilon(1e-15));
  double prev = 0;
  for (double d : {10.0, 100.0, 1000.0}) {
    const double z = idw_distance<double>(X, v2(d, 0));
    CHECK(z < prev);
    CHECK(z > -1);
    prev = z;
  }
  CHECK(prev < -0.999);
  CHECK_THROWS_AS(idw_distance<double>(Mat(0, 2), v2(0, 0)), Error);
}

TEST_CASE("idw is continuous at the samples") {
  std::mt19937_64 rng(3);
  Mat X = Mat::Random(5, 2);
  for (int i = 0; i < 5; ++i) {
    const Vec xi = X.row(i).transpose();
    const Vec dir = Vec::Random(2).normalized();
    double prev = 1;
    for (double h : {1e-1, 1e-2, 1e-3, 1e-4}) {
      const double dz = std::abs(idw_distance<double>(X, Vec(xi + h * dir)));
      CHECK(dz <= prev);
      prev = dz;
    }
    CHECK(prev < 1e-6);
  }
}

TEST_CASE("msrs min distance") {
  Mat X = v2(0, 0).transpose();
  CHECK(msrs_mindist<double>(X, v2(3, 4)) == doctest::Approx(-5));
  CHECK(msrs_mindist<double>(X, v2(0, 0)) == 0);
  Mat Y(2, 2);
  Y << 0, 0, 10, 0;
  CHECK(msrs_mindist<double>(Y, v2(4, 0)) == doctest::Approx(-4));
}

TEST_CASE("idw and msrs are maximal at the samples") {
  std::mt19937_64 rng(4);
  const Mat X = Mat::Random(6, 2);
  for (int t = 0; t < 200; ++t) {
    const Vec x = Vec::Random(2);
    CHECK(idw_distance<double>(X, x) < 0);
    CHECK(msrs_mindist<double>(X, x) < 0);
  }
  for (int i = 0; i < 6; ++i) {
    CHECK(idw_distance<double>(X, Vec(X.row(i).transpose())) == 0);
    CHECK(msrs_mindist<double>(X, Vec(X.row(i).transpose())) == 0);
  }
}

TEST_CASE("negative GP std") {
  SquaredExponential<double> k{4.0, 0.1};
  Mat X(4, 1);
  X << 0, 0.05, 1, 1.05;
  GpBlackboxModel<double> m(k, X, Vec::Zero(4), 0.0);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(neg_gp_std(m, Vec(X.row(i)))) <= 1e-5);
  CHECK(neg_gp_std(m, Vec::Constant(1, 50.0)) == doctest::Approx(-2.0));
  const double between = neg_gp_std(m, Vec::Constant(1, 0.5));
  for (int i = 0; i < 4; ++i) CHECK(between < neg_gp_std(m, Vec(X.row(i))));

  const auto z = ExplorationFunction<double>::gp_std(m);
  CHECK(z.variant() == ExploreVariant::gp_std);
  CHECK(z(Vec::Constant(1, 0.5)) == doctest::Approx(between));
}

TEST_CASE("bound exploration functions") {
  Mat X = v2(0, 0).transpose();
  const auto idw = ExplorationFunction<double>::idw(X);
  const auto ms = ExplorationFunction<double>::msrs(X);
  CHECK(idw(v2(1, 0)) == doctest::Approx(-0.5));
  CHECK(ms(v2(3, 4)) == doctest::Approx(-5));
  CHECK(parse_explore_variant("gpstd") == ExploreVariant::gp_std);
  CHECK(parse_explore_variant("msrs") == ExploreVariant::msrs);
  CHECK_THROWS_AS(parse_explore_variant("other"), Error);
}
