#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "skewmix/density.hpp"
#include "skewmix/errors.hpp"
#include "skewmix/maps.hpp"

using namespace skewmix;

namespace {

Vec v1(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

ExpandingMap doubling() {
  Eigen::MatrixXi A(1, 1);
  A << 2;
  return ExpandingMap::linear_toral(A);
}

ExpandingMap bump_map() {
  TrigPoly p(1);
  VecI k(1);
  k << 1;
  p.add_term(k, 0.0, 1.0 / (40.0 * M_PI));
  return ExpandingMap::perturbed_doubling(2, p);
}

} // namespace

TEST_CASE("linear maps have the flat density, exactly") {
  auto map = doubling();
  auto h = invariant_density(map);
  CHECK(h.K == 0);
  CHECK(h.residual == 0.0);
  CHECK(h.min_value == 1.0);
  for (int i = 0; i < 17; ++i)
    CHECK(h.eval(v1(i / 17.0)) == 1.0);

  Eigen::MatrixXi A(2, 2);
  A << 2, 1, 0, 3;
  auto map2 = ExpandingMap::linear_toral(A);
  auto h2 = invariant_density(map2);
  CHECK(h2.K == 0);
  Vec x(2);
  x << 0.3, 0.7;
  CHECK(h2.eval(x) == 1.0);
}

TEST_CASE("perturbed density: invariance, positivity, frozen value") {
  auto map = bump_map();
  auto h = invariant_density(map);
  CHECK(h.residual <= 1e-8);
  CHECK(h.min_value > 0.9);

  CHECK(h.eval(v1(0.25)) == doctest::Approx(0.999999491520716).epsilon(1e-9));

  // unit mass
  double mean = 0.0;
  const int G = 8192;
  for (int i = 0; i < G; ++i) mean += h.eval(v1(double(i) / G));
  mean /= G;
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));

  // direct invariance check at off-grid points: (L h)(x) = h(x)
  for (int i = 0; i < 40; ++i) {
    Vec x = v1((i + 0.617) / 40.0);
    double lh = 0.0;
    for (int w = 0; w < map.degree(); ++w) {
      Vec y = map.inverse_branch(x, w);
      lh += h.eval(y) / map.jac_det(y);
    }
    CHECK(lh == doctest::Approx(h.eval(x)).epsilon(1e-9));
  }
}

TEST_CASE("transfer_apply: grid guards and fixed point") {
  auto map = doubling();
  std::vector<double> f(512, 1.0);
  auto g = transfer_apply(map, f, 512);
  for (double v : g) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> tiny(4, 1.0);
  CHECK_THROWS_AS(transfer_apply(map, tiny, 4), ConfigError);
  std::vector<double> odd(500, 1.0);
  CHECK_THROWS_AS(transfer_apply(map, odd, 500), ConfigError);
}

TEST_CASE("weights A_n: normalization over preimage fibres") {
  for (bool perturbed : {false, true}) {
    auto map = perturbed ? bump_map() : doubling();
    auto h = invariant_density(map);
    for (int n = 1; n <= 6; ++n) {
      for (int i = 0; i < 7; ++i) {
        Vec x = v1((i + 0.413) / 7.0);
        auto tree = map.preimage_tree(x, n);
        double total = 0.0;
        for (const auto& y : tree.level[n]) total += weight_A(map, h, y, n);
        CHECK(std::abs(total - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("weights A_n: cocycle multiplicativity") {
  auto map = bump_map();
  auto h = invariant_density(map);
  for (int n : {1, 2, 3}) {
    for (int m : {1, 2, 4}) {
      Vec y = v1(0.2137);
      Vec tmy = y;
      for (int j = 0; j < m; ++j) tmy = map.eval(tmy);
      double lhs = weight_A(map, h, y, n + m);
      double rhs = weight_A(map, h, tmy, n) * weight_A(map, h, y, m);
      CHECK(std::abs(lhs - rhs) <= 1e-10);
    }
  }
}

TEST_CASE("weights A_n: log-space path agrees at large n") {
  auto map = doubling();
  auto h = invariant_density(map);
  // flat density: A_n = 2^{-n} exactly, including past the direct-product cutoff
  double a25 = weight_A(map, h, v1(0.37), 25);
  CHECK(a25 == doctest::Approx(std::pow(2.0, -25)).epsilon(1e-12));
}

TEST_CASE("density coefficients: hermitian symmetry") {
  auto map = bump_map();
  auto h = invariant_density(map);
  CHECK(h.K >= 1);
  VecI k(1);
  for (int kk = 1; kk <= h.K; ++kk) {
    k << kk;
    auto c = h.coef_at(k);
    k << -kk;
    auto cm = h.coef_at(k);
    CHECK(std::abs(c - std::conj(cm)) < 1e-13);
  }
  k << 0;
  CHECK(std::abs(h.coef_at(k) - std::complex<double>(1.0, 0.0)) < 1e-13);
}
