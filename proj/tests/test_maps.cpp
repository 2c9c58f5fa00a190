#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "skewmix/errors.hpp"
#include "skewmix/maps.hpp"

using namespace skewmix;

namespace {

Vec v1(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

Vec v2(double x, double y) {
  Vec v(2);
  v[0] = x;
  v[1] = y;
  return v;
}

ExpandingMap doubling() {
  Eigen::MatrixXi A(1, 1);
  A << 2;
  return ExpandingMap::linear_toral(A);
}

ExpandingMap tripling() {
  Eigen::MatrixXi A(1, 1);
  A << 3;
  return ExpandingMap::linear_toral(A);
}

// T(y) = 2y + sin(2 pi y) / (40 pi), a small smooth bump on the doubling map
ExpandingMap bump_map() {
  TrigPoly p(1);
  VecI k(1);
  k << 1;
  p.add_term(k, 0.0, 1.0 / (40.0 * M_PI));
  return ExpandingMap::perturbed_doubling(2, p);
}

} // namespace

TEST_CASE("doubling map basics") {
  auto map = doubling();
  CHECK(map.dim() == 1);
  CHECK(map.degree() == 2);
  CHECK(map.gamma() == doctest::Approx(2.0).epsilon(1e-14));

  CHECK(map.eval(v1(0.3))[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(map.eval(v1(0.7))[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(map.jacobian(v1(0.3))(0, 0) == doctest::Approx(2.0));
  CHECK(map.jac_det(v1(0.9)) == doctest::Approx(2.0));

  auto pre = map.preimages(v1(0.3));
  REQUIRE(pre.size() == 2);
  CHECK(pre[0][0] == doctest::Approx(0.15).epsilon(1e-14));
  CHECK(pre[1][0] == doctest::Approx(0.65).epsilon(1e-14));
  for (const auto& y : pre)
    CHECK(torus_dist(map.eval(y), v1(0.3)) < 1e-14);
}

TEST_CASE("linear toral 2d: degree and preimages") {
  Eigen::MatrixXi A(2, 2);
  A << 2, 0, 0, 3;
  auto map = ExpandingMap::linear_toral(A);
  CHECK(map.dim() == 2);
  CHECK(map.degree() == 6);
  CHECK(map.gamma() == doctest::Approx(2.0).epsilon(1e-12));

  Vec x = v2(0.37, 0.81);
  auto pre = map.preimages(x);
  REQUIRE(pre.size() == 6);
  for (const auto& y : pre) {
    Vec img = map.eval(y);
    CHECK(torus_dist(img, x) < 1e-12);
  }
  // all six preimages distinct on the torus
  for (std::size_t i = 0; i < pre.size(); ++i)
    for (std::size_t j = i + 1; j < pre.size(); ++j)
      CHECK(torus_dist(pre[i], pre[j]) > 1e-3);
}

TEST_CASE("linear toral rejects non-expanding matrices") {
  Eigen::MatrixXi A(2, 2);
  A << 1, 1, 0, 2; // eigenvalue 1
  CHECK_THROWS_AS(ExpandingMap::linear_toral(A), ConfigError);
  Eigen::MatrixXi B(2, 2);
  B << 2, 3, 0, 2; // expanding spectrum but smallest singular value 1
  CHECK_THROWS_AS(ExpandingMap::linear_toral(B), ConfigError);
  Eigen::MatrixXi C(1, 1);
  C << 1; // degree 1, not expanding
  CHECK_THROWS_AS(ExpandingMap::linear_toral(C), ConfigError);
}

TEST_CASE("perturbed doubling: evaluation and certified expansion") {
  auto map = bump_map();
  CHECK(map.degree() == 2);
  // |p'| <= 2 pi / (40 pi) = 0.05
  CHECK(map.gamma() == doctest::Approx(1.95).epsilon(1e-9));
  CHECK(map.eval(v1(0.25))[0] ==
        doctest::Approx(0.5 + 1.0 / (40.0 * M_PI)).epsilon(1e-15));
  CHECK(map.eval(v1(0.25))[0] ==
        doctest::Approx(0.5079577471545947).epsilon(1e-15));
  CHECK(map.jacobian(v1(0.0))(0, 0) == doctest::Approx(2.05).epsilon(1e-14));
}

TEST_CASE("perturbed doubling: Newton inverse branches") {
  auto map = bump_map();
  Vec x = v1(0.3);
  Vec y0 = map.inverse_branch(x, 0);
  Vec y1 = map.inverse_branch(x, 1);
  CHECK(y0[0] == doctest::Approx(0.146828267201281).epsilon(1e-12));
  CHECK(y1[0] == doctest::Approx(0.653266292067402).epsilon(1e-12));
  CHECK(torus_dist(map.eval(y0), x) < 1e-12);
  CHECK(torus_dist(map.eval(y1), x) < 1e-12);

  // branches are exact inverses across a sweep
  for (int i = 0; i < 64; ++i) {
    Vec q = v1((i + 0.31) / 64.0);
    for (int w = 0; w < 2; ++w)
      CHECK(torus_dist(map.eval(map.inverse_branch(q, w)), q) < 1e-11);
  }
}

TEST_CASE("perturbed doubling rejects too-large bumps") {
  TrigPoly p(1);
  VecI k(1);
  k << 1;
  p.add_term(k, 0.0, 0.09); // |p'| = 0.09 * 2 pi > 1/2
  CHECK_THROWS_AS(ExpandingMap::perturbed_doubling(2, p), ConfigError);
}

TEST_CASE("preimage tree: ancestor chain convention") {
  auto map = doubling();
  Vec x = v1(0.3);
  auto tree = map.preimage_tree(x, 3);
  CHECK(tree.depth == 3);
  CHECK(tree.degree == 2);
  REQUIRE(tree.level.size() == 4);
  CHECK(tree.level[0].size() == 1);
  CHECK(tree.level[1].size() == 2);
  CHECK(tree.level[2].size() == 4);
  CHECK(tree.level[3].size() == 8);

  // child at level k+1 maps onto its parent at level k
  for (int k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < tree.level[k].size(); ++i)
      for (int w = 0; w < 2; ++w) {
        const Vec& child = tree.level[k + 1][i * 2 + w];
        CHECK(torus_dist(map.eval(child), tree.level[k][i]) < 1e-12);
      }

  // leaves are full n-th preimages
  for (const auto& leaf : tree.level[3]) {
    Vec z = leaf;
    for (int j = 0; j < 3; ++j) z = map.eval(z);
    CHECK(torus_dist(z, x) < 1e-11);
  }
}

TEST_CASE("preimage tree: node budget") {
  auto map = doubling();
  CHECK_THROWS_AS(map.preimage_tree(v1(0.5), 30, 1000), BudgetExceeded);
}

TEST_CASE("periodic orbits: doubling counts and points") {
  auto map = doubling();
  auto orbits = map.periodic_orbits(4);

  int c1 = 0, c2 = 0, c3 = 0, c4 = 0;
  for (const auto& o : orbits) {
    if (o.period == 1) ++c1;
    if (o.period == 2) ++c2;
    if (o.period == 3) ++c3;
    if (o.period == 4) ++c4;
  }
  CHECK(c1 == 1);
  CHECK(c2 == 1);
  CHECK(c3 == 2);
  CHECK(c4 == 3);

  for (const auto& o : orbits) {
    // genuine orbit of the claimed minimal period
    for (int j = 0; j < o.period; ++j) {
      Vec img = map.eval(o.points[j]);
      CHECK(torus_dist(img, o.points[(j + 1) % o.period]) < 1e-10);
    }
    for (int q = 1; q < o.period; ++q)
      if (o.period % q == 0)
        CHECK(torus_dist(o.points[q], o.points[0]) > 1e-6);
    for (const auto& pt : o.points) {
      CHECK(pt[0] >= 0.0);
      CHECK(pt[0] < 1.0);
    }
  }

  // the 2-cycle is {1/3, 2/3}
  for (const auto& o : orbits)
    if (o.period == 2) {
      double lo = std::min(o.points[0][0], o.points[1][0]);
      double hi = std::max(o.points[0][0], o.points[1][0]);
      CHECK(lo == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
      CHECK(hi == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("periodic orbits: tripling fixed points") {
  auto map = tripling();
  auto orbits = map.periodic_orbits(1);
  REQUIRE(orbits.size() == 2);
  CHECK(orbits[0].points[0][0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(orbits[1].points[0][0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("periodic orbits: perturbed map closes up") {
  auto map = bump_map();
  auto orbits = map.periodic_orbits(4);
  CHECK(orbits.size() == 7); // same symbolic count as doubling
  for (const auto& o : orbits)
    for (int j = 0; j < o.period; ++j)
      CHECK(torus_dist(map.eval(o.points[j]),
                       o.points[(j + 1) % o.period]) < 1e-10);
}

TEST_CASE("fiber rotation: evaluation and gradient bound") {
  TrigPoly t1(1), t2(1);
  VecI k(1);
  k << 1;
  t1.add_term(k, 1.0, 0.0); // cos(2 pi x)
  t2.add_term(k, 0.0, 0.5); // 0.5 sin(2 pi x)
  FiberRotation tau(1, {t1, t2});
  CHECK(tau.fiber_dim() == 2);
  CHECK(tau.base_dim() == 1);

  Vec x = v1(0.2);
  Vec val = tau.eval(x);
  CHECK(val[0] == doctest::Approx(std::cos(0.4 * M_PI)).epsilon(1e-15));
  CHECK(val[1] == doctest::Approx(0.5 * std::sin(0.4 * M_PI)).epsilon(1e-15));

  Mat J = tau.jacobian(x);
  CHECK(J.rows() == 2);
  CHECK(J.cols() == 1);
  CHECK(J(0, 0) ==
        doctest::Approx(-kTwoPi * std::sin(0.4 * M_PI)).epsilon(1e-13));
  CHECK(J(1, 0) ==
        doctest::Approx(0.5 * kTwoPi * std::cos(0.4 * M_PI)).epsilon(1e-13));

  // certified sup of |D tau| dominates a dense sample
  double samp = 0.0;
  for (int i = 0; i < 2000; ++i) {
    Mat Ji = tau.jacobian(v1(i / 2000.0));
    samp = std::max(samp, Ji.norm());
  }
  CHECK(tau.dtau_sup() >= samp - 1e-12);
  CHECK(tau.dtau_sup() <= samp * 1.2 + 1e-12);
}

TEST_CASE("torus wrap and distance") {
  CHECK(wrap01(1.0) == 0.0);
  CHECK(wrap01(-0.25) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(wrap01(2.75) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(torus_dist(0.95, 0.05) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(torus_dist(v1(0.999999), v1(0.000001)) < 1e-5);
}
