#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "skewmix/cobound.hpp"
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

FiberRotation cos_tau() {
  TrigPoly t(1);
  VecI k(1);
  k << 1;
  t.add_term(k, 1.0, 0.0);
  return FiberRotation(1, {t});
}

// tau = 0.3 + u - u o T, u = sin(2 pi x)/(2 pi)
FiberRotation cob_tau() {
  TrigPoly t(1, 0.3);
  VecI k(1);
  k << 1;
  t.add_term(k, 0.0, 1.0 / kTwoPi);
  k << 2;
  t.add_term(k, 0.0, -1.0 / kTwoPi);
  return FiberRotation(1, {t});
}

// tau = (cos(2 pi x), sqrt(3) cos(2 pi x)): killed by (sqrt3, -1)/2
FiberRotation sqrt3_tau() {
  TrigPoly t1(1), t2(1);
  VecI k(1);
  k << 1;
  t1.add_term(k, 1.0, 0.0);
  t2.add_term(k, std::sqrt(3.0), 0.0);
  return FiberRotation(1, {t1, t2});
}

// 2 tau_1 - tau_2 = 0.4 + u - u o T with u = 0.2 sin(2 pi x)
FiberRotation int2_tau() {
  TrigPoly t1(1), t2(1, -0.4);
  VecI k(1);
  k << 1;
  t1.add_term(k, 1.0, 0.0);
  t2.add_term(k, 2.0, -0.2);
  k << 2;
  t2.add_term(k, 0.0, 0.2);
  return FiberRotation(1, {t1, t2});
}

} // namespace

TEST_CASE("obstructions: frozen sums for the cosine shift") {
  auto map = doubling();
  auto obs = collect_obstructions(map, cos_tau(), 4);
  REQUIRE(obs.size() == 7);

  std::vector<std::pair<int, double>> got;
  for (const auto& o : obs) got.push_back({o.period, o.sum[0]});
  std::sort(got.begin(), got.end());

  const std::vector<std::pair<int, double>> want = {
      {1, 1.0}, {2, -1.0}, {3, -0.5}, {3, -0.5},
      {4, -1.0}, {4, 0.5}, {4, 0.5}};
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(got[i].first == want[i].first);
    CHECK(got[i].second == doctest::Approx(want[i].second).epsilon(1e-9));
  }
}

TEST_CASE("obstructions: sums are cyclic invariants") {
  auto map = doubling();
  auto tau = cos_tau();
  auto obs = collect_obstructions(map, tau, 4);
  for (const auto& o : obs) {
    for (int r = 1; r < o.period; ++r) {
      double rot = 0.0;
      for (int j = 0; j < o.period; ++j)
        rot += tau.eval(o.orbit[(j + r) % o.period])[0];
      CHECK(std::abs(rot - o.sum[0]) <= 1e-12);
    }
  }
}

TEST_CASE("detect_real: recovers the sqrt3 direction") {
  auto map = doubling();
  auto obs = collect_obstructions(map, sqrt3_tau(), 5);
  REQUIRE(int(obs.size()) >= 4);
  auto dep = detect_real(obs, 2);
  CHECK(std::abs(dep.v.norm() - 1.0) <= 1e-12);
  CHECK(dep.v[0] == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-10));
  CHECK(dep.v[1] == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(std::abs(dep.c) <= 1e-10);
  CHECK(dep.rms_residual <= 1e-10);

  std::vector<Obstruction> few(obs.begin(), obs.begin() + 3);
  CHECK_THROWS_AS(detect_real(few, 2), ConfigError);
}

TEST_CASE("detect_real: generic shifts leave a large misfit") {
  auto map = doubling();
  auto obs = collect_obstructions(map, cos_tau(), 5);
  auto dep = detect_real(obs, 1);
  CHECK(dep.rms_residual >= 0.1);
}

TEST_CASE("detect_integral: integral directions in both fiber dimensions") {
  auto map = doubling();

  {
    auto obs = collect_obstructions(map, cob_tau(), 5);
    auto dep = detect_integral(obs, 1);
    REQUIRE(dep.has_value());
    CHECK(dep->v[0] == 1);
    CHECK(dep->c == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(dep->residual <= 1e-10);
  }
  {
    auto obs = collect_obstructions(map, int2_tau(), 5);
    auto dep = detect_integral(obs, 2);
    REQUIRE(dep.has_value());
    CHECK(dep->v[0] == 2);
    CHECK(dep->v[1] == -1);
    CHECK(dep->c == doctest::Approx(0.4).epsilon(1e-12));
  }
}

TEST_CASE("detect_integral: no integer direction for the sqrt3 shift") {
  auto map = doubling();
  auto obs = collect_obstructions(map, sqrt3_tau(), 5);
  CHECK(!detect_integral(obs, 2).has_value());
  // the cosine shift admits none either
  auto obs1 = collect_obstructions(map, cos_tau(), 5);
  CHECK(!detect_integral(obs1, 1).has_value());
}

TEST_CASE("backward derivative series: frozen value and gradient loop") {
  auto map = doubling();
  auto tau = cob_tau();
  auto f = vfield(map, tau, v1(1.0), 20);
  CHECK(f.tail_bound <= 1e-14);
  // V = -grad(u) for u = sin(2 pi x)/(2 pi): V(0.2) = -cos(0.4 pi)
  CHECK(f.values[4][0] ==
        doctest::Approx(-0.30901699437494745).epsilon(1e-10));

  auto fine = vfield(map, tau, v1(1.0));
  auto rep = check_exactness(fine);
  CHECK(rep.loop_max <= 1e-10);
  CHECK(rep.exact);
}

TEST_CASE("exactness: mean obstruction rejects non-gradients") {
  VFieldSamples f;
  f.grid = 256;
  f.dim = 1;
  f.v = v1(1.0);
  f.values.resize(256);
  for (int i = 0; i < 256; ++i)
    f.values[i] = v1(std::cos(kTwoPi * i / 256.0) + 0.3);
  auto rep = check_exactness(f);
  CHECK(rep.loop_max == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(!rep.exact);
  CHECK_THROWS_AS(reconstruct_u(f), NotExact);
}

TEST_CASE("reconstruct_u: spectral antiderivative fidelity") {
  auto map = doubling();
  auto tau = cob_tau();
  const int G = 4096;
  auto f = vfield(map, tau, v1(1.0), G);
  for (auto& v : f.values) v = -v; // pass the gradient of +u
  TrigPoly u = reconstruct_u(f);

  CHECK(std::abs(u.eval(Vec::Zero(1))) <= 1e-12);
  double sup = 0.0;
  for (int i = 0; i < 997; ++i) {
    Vec x = v1(i / 997.0);
    sup = std::max(sup,
                   std::abs(u.eval(x) - std::sin(kTwoPi * x[0]) / kTwoPi));
  }
  CHECK(sup <= 10.0 / (double(G) * G));
}

TEST_CASE("livsic: integral certificate end to end") {
  auto map = doubling();
  auto cert = livsic(map, cob_tau());
  REQUIRE(cert.has_value());
  CHECK(cert->valid);
  REQUIRE(cert->v_integral.has_value());
  CHECK((*cert->v_integral)[0] == 1);
  CHECK(cert->v[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cert->c == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(cert->c_mod1 == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(cert->equation_residual <= 1e-8);
  CHECK(cert->orbit_rms <= 1e-10);

  double sup = 0.0;
  for (int i = 0; i < 997; ++i) {
    Vec x = v1(i / 997.0);
    sup = std::max(
        sup, std::abs(cert->u.eval(x) - std::sin(kTwoPi * x[0]) / kTwoPi));
  }
  CHECK(sup <= 1e-10);
}

TEST_CASE("livsic: real-only certificate for the sqrt3 shift") {
  auto map = doubling();
  auto cert = livsic(map, sqrt3_tau());
  REQUIRE(cert.has_value());
  CHECK(cert->valid);
  CHECK(!cert->v_integral.has_value());
  CHECK(cert->v[0] == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-10));
  CHECK(cert->v[1] == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(std::abs(cert->c) <= 1e-10);
  CHECK(cert->equation_residual <= 1e-10);

  // integral-only search must come up empty on this shift
  LivsicOptions opt;
  opt.mode = LivsicOptions::Mode::Integral;
  CHECK(!livsic(map, sqrt3_tau(), opt).has_value());
}

TEST_CASE("livsic: no certificate for honestly mixing shifts") {
  auto map = doubling();
  CHECK(!livsic(map, cos_tau()).has_value());
}

TEST_CASE("livsic: two-dimensional integral certificate") {
  auto map = doubling();
  auto cert = livsic(map, int2_tau());
  REQUIRE(cert.has_value());
  CHECK(cert->valid);
  REQUIRE(cert->v_integral.has_value());
  CHECK((*cert->v_integral)[0] == 2);
  CHECK((*cert->v_integral)[1] == -1);
  CHECK(cert->c == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(cert->equation_residual <= 1e-8);
}

TEST_CASE("semiconjugacy: exact for a constant shift") {
  auto map = doubling();
  FiberRotation tau(1, {TrigPoly(1, 0.3)});
  CoboundaryCertificate cert;
  cert.v = v1(1.0);
  VecI vi(1);
  vi << 1;
  cert.v_integral = vi;
  cert.c = 0.3;
  cert.c_mod1 = 0.3;
  cert.u = TrigPoly(1, 0.0);
  cert.valid = true;
  auto semi = build_semiconjugacy(map, tau, cert);
  CHECK(semi.residual == 0.0);
  CHECK(semi.c == doctest::Approx(0.3));
}

TEST_CASE("semiconjugacy: certified factor maps") {
  auto map = doubling();
  {
    auto cert = livsic(map, cob_tau());
    REQUIRE(cert.has_value());
    auto semi = build_semiconjugacy(map, cob_tau(), *cert);
    CHECK(semi.residual <= 1e-7);
    CHECK(semi.c_mod1 == doctest::Approx(0.3).epsilon(1e-9));
  }
  {
    auto cert = livsic(map, int2_tau());
    REQUIRE(cert.has_value());
    auto semi = build_semiconjugacy(map, int2_tau(), *cert);
    CHECK(semi.residual <= 1e-7);
  }
  {
    auto cert = livsic(map, sqrt3_tau());
    REQUIRE(cert.has_value());
    CHECK_THROWS_AS(build_semiconjugacy(map, sqrt3_tau(), *cert),
                    NotIntegral);
  }
}
