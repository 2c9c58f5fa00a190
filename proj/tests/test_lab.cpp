#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "skewmix/config.hpp"
#include "skewmix/density.hpp"
#include "skewmix/errors.hpp"
#include "skewmix/lab.hpp"

using namespace skewmix;

namespace {

const char* kShipped[] = {"mixing_cos.cfg", "coboundary_integral.cfg",
                          "coboundary_nonintegral.cfg"};

std::string shipped_path(const char* name) {
  return std::string(SKEWMIX_CONFIG_DIR) + "/" + name;
}

cplx eval_obs(const Observable& o, const Vec& x, const Vec& y) {
  cplx s = 0.0;
  for (const auto& t : o.terms) {
    double ph = 0.0;
    for (int i = 0; i < x.size(); ++i) ph += t.k[i] * x[i];
    for (int i = 0; i < y.size(); ++i) ph += t.nu[i] * y[i];
    s += t.c * std::exp(cplx(0.0, kTwoPi * ph));
  }
  return s;
}

// brute-force reference: full product grid, no frequency bookkeeping
CorrelationSeries oracle_series(const ExpandingMap& map,
                                const FiberRotation& tau,
                                const DensityModel& h, const Observable& phi,
                                const Observable& psi, int n_max, long gx,
                                int gy) {
  const int l = tau.fiber_dim();
  std::vector<Vec> xs(gx, Vec::Zero(1));
  std::vector<double> w(gx);
  double tot = 0.0;
  for (long i = 0; i < gx; ++i) {
    xs[i][0] = double(i) / double(gx);
    w[i] = h.eval(xs[i]);
    tot += w[i];
  }
  for (long i = 0; i < gx; ++i) w[i] /= tot;

  cplx mphi = 0.0, mpsi = 0.0;
  for (long i = 0; i < gx; ++i)
    for (int jy = 0; jy < gy; ++jy) {
      Vec y = Vec::Zero(l);
      // a single index scans the fiber grid in row-major order
      int rem = jy;
      for (int c = 0; c < l; ++c) {
        y[c] = double(rem % gy) / double(gy);
        rem /= gy;
      }
      (void)rem;
      mphi += w[i] / double(gy) * eval_obs(phi, xs[i], y);
      mpsi += w[i] / double(gy) * eval_obs(psi, xs[i], y);
    }

  // l = 2 needs gy^2 fiber points; redo means with a nested loop
  if (l == 2) {
    mphi = mpsi = 0.0;
    for (long i = 0; i < gx; ++i)
      for (int j1 = 0; j1 < gy; ++j1)
        for (int j2 = 0; j2 < gy; ++j2) {
          Vec y(2);
          y << double(j1) / gy, double(j2) / gy;
          mphi += w[i] / double(gy * gy) * eval_obs(phi, xs[i], y);
          mpsi += w[i] / double(gy * gy) * eval_obs(psi, xs[i], y);
        }
  }

  CorrelationSeries out;
  out.mean_phi = mphi;
  out.mean_psi = mpsi;
  out.gx = gx;
  out.gy = gy;
  std::vector<Vec> cur = xs;
  std::vector<Vec> S(gx, Vec::Zero(l));
  for (int n = 0; n <= n_max; ++n) {
    cplx acc = 0.0;
    for (long i = 0; i < gx; ++i) {
      if (l == 1) {
        for (int jy = 0; jy < gy; ++jy) {
          Vec y(1), yf(1);
          y << double(jy) / gy;
          yf << y[0] + S[i][0];
          acc += w[i] / double(gy) * eval_obs(phi, cur[i], yf) *
                 std::conj(eval_obs(psi, xs[i], y));
        }
      } else {
        for (int j1 = 0; j1 < gy; ++j1)
          for (int j2 = 0; j2 < gy; ++j2) {
            Vec y(2);
            y << double(j1) / gy, double(j2) / gy;
            Vec yf = y + S[i];
            acc += w[i] / double(gy * gy) * eval_obs(phi, cur[i], yf) *
                   std::conj(eval_obs(psi, xs[i], y));
          }
      }
    }
    out.C.push_back(acc - mphi * std::conj(mpsi));
    out.abs_C.push_back(std::abs(out.C.back()));
    for (long i = 0; i < gx; ++i) {
      S[i] += tau.eval(cur[i]);
      cur[i] = map.eval(cur[i]);
    }
  }
  return out;
}

const char* kMiniMixing = R"(seed = 7
[map]
kind = doubling
[tau]
fiber_dim = 1
term = 1 1 1 0
[spectral]
K = 32
nu_max = 1
n_norms = 12
[symbol]
n_max = 4
nx = 32
nxi = 33
dir_degrees = 90
[livsic]
p_max = 4
[correlate]
phi = 0 1 1 0
psi = 0 1 1 0
gx = 4099
gy = 4
n_max = 12
fit_lo = 4
fit_hi = 10
)";

const char* kMiniCob = R"(seed = 7
[map]
kind = doubling
[tau]
fiber_dim = 1
const = 1 0.3
term = 1 1 0 0.15915494309189535
term = 1 2 0 -0.15915494309189535
[spectral]
K = 32
nu_max = 1
n_norms = 12
[symbol]
n_max = 3
nx = 32
nxi = 33
[livsic]
p_max = 4
[correlate]
phi = 0 1 1 0
psi = 0 1 1 0
gx = 4099
gy = 4
n_max = 12
fit_lo = 4
fit_hi = 10
)";

} // namespace

TEST_CASE("config: serialization is a fixed point of parse") {
  for (const char* name : kShipped) {
    LabConfig c0 = load_config_file(shipped_path(name));
    std::string s1 = serialize_config(c0);
    LabConfig c1 = parse_config(s1);
    CHECK(serialize_config(c1) == s1);
  }
  LabConfig m = parse_config(kMiniMixing);
  std::string s = serialize_config(m);
  CHECK(serialize_config(parse_config(s)) == s);
}

TEST_CASE("config: shipped experiment files parse as expected") {
  LabConfig c = load_config_file(shipped_path("mixing_cos.cfg"));
  CHECK(c.map.kind == "doubling");
  CHECK(c.tau.fiber_dim == 1);
  REQUIRE(c.tau.terms.size() == 1);
  CHECK(c.tau.terms[0].k == std::vector<int>{1});
  CHECK(c.tau.terms[0].a == 1.0);
  CHECK(c.spectral.present);
  CHECK(c.spectral.K == 64);
  CHECK(c.correlate.gx == 1299709);

  LabConfig c2 = load_config_file(shipped_path("coboundary_nonintegral.cfg"));
  CHECK(c2.tau.fiber_dim == 2);
  REQUIRE(c2.tau.terms.size() == 2);
  CHECK(c2.tau.terms[1].comp == 2);
  CHECK(c2.tau.terms[1].a == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("config: malformed inputs are rejected with line context") {
  auto reject = [](const std::string& text) {
    CHECK_THROWS_AS(parse_config(text), ConfigError);
  };
  reject("[bogus]\n");                              // unknown section
  reject("[map]\nkind = doubling\nfoo = 1\n");      // unknown key
  reject("[tau]\nfiber_dim = 1\n");                 // kind missing
  reject("[map]\nkind = quadrupling\n");            // unknown kind
  reject("[map]\nkind = linear\nmatrix = 2 1; 0\n");// ragged matrix
  reject("[map]\nkind = linear\n");                 // matrix missing
  reject("[map]\nkind = doubling\n[tau]\nterm = 2 1 1 0\n"); // comp > l
  reject("[map]\nkind = doubling\n[tau]\nterm = 1 1 1\n");   // short term
  reject("[map]\nkind = doubling\nkind\n");         // no '='
  reject("[map]\nkind = doubling\n[spectral]\nK = 0\n");
  reject("[map]\nkind = doubling\n[correlate]\nphi = 0 1 1 0\n"
         "psi = 0 1 1 0\nfit_lo = 9\nfit_hi = 4\n");
  reject("[map]\nkind = doubling\n[correlate]\nphi = 0 1 1 0\n"
         "psi = 0 1 1 0\nn_max = 8\nfit_hi = 20\n");
  reject("[map]\nkind = doubling\n[correlate]\nphi = 0 1 1\n"
         "psi = 0 1 1 0\n");                        // short observable
  reject("[map]\nkind = doubling\nN0 = 1\n");

  try {
    parse_config("[map]\nkind = doubling\nfoo = 1\n");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("config: comments and blank lines are ignored") {
  LabConfig c = parse_config(
      "# experiment\nseed = 11 # trailing\n\n[map]\nkind = tripling\n");
  CHECK(c.seed == 11);
  CHECK(c.map.kind == "tripling");
  CHECK(build_map(c).degree() == 3);
}

TEST_CASE("observables: construction validates term shapes") {
  ObsTermSpec good{{1}, {2}, 0.5, -0.25};
  Observable o = make_observable({good}, 1, 1);
  REQUIRE(o.terms.size() == 1);
  CHECK(o.terms[0].c == cplx(0.5, -0.25));
  Vec x(1), y(1);
  x << 0.2, y << 0.1;
  cplx want = cplx(0.5, -0.25) * std::exp(cplx(0, kTwoPi * (0.2 + 0.2)));
  CHECK(std::abs(eval_obs(o, x, y) - want) <= 1e-15);

  CHECK_THROWS_AS(make_observable({ObsTermSpec{{1, 2}, {1}, 1, 0}}, 1, 1),
                  ConfigError);
  CHECK_THROWS_AS(make_observable({ObsTermSpec{{1}, {1, 0}, 1, 0}}, 1, 1),
                  ConfigError);
  CHECK_THROWS_AS(make_observable({}, 1, 1), ConfigError);
}

TEST_CASE("correlation: frequency bookkeeping matches the product grid") {
  Eigen::MatrixXi A(1, 1);
  A << 2;
  auto map = ExpandingMap::linear_toral(A);
  TrigPoly t(1);
  VecI k(1);
  k << 1;
  t.add_term(k, 1.0, 0.0);
  FiberRotation tau(1, {t});
  DensityModel h = invariant_density(map);

  Observable phi = make_observable(
      {ObsTermSpec{{1}, {1}, 1.0, 0.0}, ObsTermSpec{{2}, {-1}, 0.3, 0.2}}, 1,
      1);
  Observable psi = make_observable(
      {ObsTermSpec{{0}, {1}, 1.0, 0.0}, ObsTermSpec{{1}, {-1}, 0.0, -0.4}},
      1, 1);

  auto fast = correlation_series(map, tau, h, phi, psi, 6, 101, 8);
  auto ref = oracle_series(map, tau, h, phi, psi, 6, 101, 8);
  CHECK(std::abs(fast.mean_phi - ref.mean_phi) <= 1e-12);
  CHECK(std::abs(fast.mean_psi - ref.mean_psi) <= 1e-12);
  REQUIRE(fast.C.size() == ref.C.size());
  for (std::size_t n = 0; n < ref.C.size(); ++n)
    CHECK(std::abs(fast.C[n] - ref.C[n]) <= 1e-12);
}

TEST_CASE("correlation: two-dimensional fiber against the product grid") {
  Eigen::MatrixXi A(1, 1);
  A << 2;
  auto map = ExpandingMap::linear_toral(A);
  TrigPoly t1(1), t2(1);
  VecI k(1);
  k << 1;
  t1.add_term(k, 1.0, 0.0);
  t2.add_term(k, 0.0, 0.5);
  FiberRotation tau(1, {t1, t2});
  DensityModel h = invariant_density(map);

  Observable phi = make_observable(
      {ObsTermSpec{{1}, {1, 0}, 1.0, 0.0}, ObsTermSpec{{0}, {0, 1}, 0.5, 0.0}},
      1, 2);
  Observable psi = make_observable({ObsTermSpec{{0}, {1, 0}, 1.0, 0.0}}, 1, 2);

  auto fast = correlation_series(map, tau, h, phi, psi, 5, 97, 6);
  auto ref = oracle_series(map, tau, h, phi, psi, 5, 97, 6);
  for (std::size_t n = 0; n < ref.C.size(); ++n)
    CHECK(std::abs(fast.C[n] - ref.C[n]) <= 1e-12);
}

TEST_CASE("correlation: fiber grid must resolve the observable frequencies") {
  Eigen::MatrixXi A(1, 1);
  A << 2;
  auto map = ExpandingMap::linear_toral(A);
  TrigPoly t(1);
  VecI k(1);
  k << 1;
  t.add_term(k, 1.0, 0.0);
  FiberRotation tau(1, {t});
  DensityModel h = invariant_density(map);
  Observable phi = make_observable({ObsTermSpec{{0}, {1}, 1, 0}}, 1, 1);
  CHECK_THROWS_AS(correlation_series(map, tau, h, phi, phi, 4, 101, 2),
                  ConfigError);
}

TEST_CASE("correlation: coboundary shifts give flat curves") {
  LabConfig cfg = load_config_file(shipped_path("coboundary_integral.cfg"));
  auto map = build_map(cfg);
  auto tau = build_tau(cfg);
  DensityModel h = invariant_density(map);
  Observable phi = make_observable(cfg.correlate.phi, 1, 1);
  auto series = correlation_series(map, tau, h, phi, phi, 30, 65521, 8);
  double lo = 1e300, hi = 0.0;
  for (int n = 1; n <= 30; ++n) {
    lo = std::min(lo, series.abs_C[n]);
    hi = std::max(hi, series.abs_C[n]);
  }
  CHECK(hi > 0.1);
  CHECK(lo / hi >= 0.99);
}

TEST_CASE("decay fit: exact geometric data is recovered to roundoff") {
  std::vector<double> a;
  for (int n = 0; n <= 30; ++n) a.push_back(2.0 * std::pow(0.7, n));
  auto fit = fit_decay_rate(a, 5, 25);
  CHECK(fit.rate == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(fit.log_amp == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  CHECK(fit.r2 >= 1.0 - 1e-12);
  CHECK(fit.n_used == 21);
  CHECK(fit.lo == 5);
  CHECK(fit.hi == 25);
}

TEST_CASE("decay fit: tolerates additive noise near the floor") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> a;
  for (int n = 0; n <= 30; ++n)
    a.push_back(std::pow(0.7, n) + 1e-14 * U(rng));
  auto fit = fit_decay_rate(a, 5, 25);
  CHECK(fit.rate == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(fit.r2 >= 0.999);
}

TEST_CASE("decay fit: flat and dead series are flagged") {
  std::vector<double> flat(31, 0.5);
  auto fit = fit_decay_rate(flat, 5, 25);
  CHECK(fit.rate == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.r2 < 0.5);

  std::vector<double> dead(31, 1e-16);
  CHECK_THROWS_AS(fit_decay_rate(dead, 5, 25), WindowTooNoisy);
  std::vector<double> live(31, 0.0);
  for (int n = 0; n <= 30; ++n) live[n] = std::pow(0.7, n);
  CHECK_THROWS_AS(fit_decay_rate(live, 3, 6), WindowTooNoisy); // 4 points
}

TEST_CASE("probe frequencies: canonical half lattice") {
  auto one = canonical_nu_set(1, 3);
  REQUIRE(one.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(one[i][0] == i + 1);

  auto two = canonical_nu_set(2, 1);
  REQUIRE(two.size() == 4);
  const int want[4][2] = {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
  for (int i = 0; i < 4; ++i) {
    CHECK(two[i][0] == want[i][0]);
    CHECK(two[i][1] == want[i][1]);
  }
  // every nonzero frequency in the box is covered by the set or its mirror
  auto covered = [&](int a, int b) {
    for (const auto& nu : two)
      if ((nu[0] == a && nu[1] == b) || (nu[0] == -a && nu[1] == -b))
        return true;
    return false;
  };
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      if (a != 0 || b != 0) CHECK(covered(a, b));
}

TEST_CASE("dichotomy: mixing configuration, deterministic report") {
  LabConfig cfg = parse_config(kMiniMixing);
  auto r1 = dichotomy_report(cfg);
  auto r2 = dichotomy_report(cfg);
  CHECK(r1.dump(2) == r2.dump(2));

  CHECK(r1["verdict"]["class"] == "exponential_mixing");
  CHECK(r1["verdict"]["subtype"].is_null());
  CHECK(r1["verdict"]["v"].is_null());
  CHECK(r1["config_echo"] == serialize_config(cfg));
  REQUIRE(r1["spectrum"].size() == 1);
  CHECK(r1["spectrum"][0]["nu"][0] == 1);
  CHECK(r1["spectrum"][0]["radius"].get<double>() < 0.999);
  CHECK(!r1["symbol"]["n0"].is_null());
  CHECK(r1["correlation"]["fit"].contains("rate"));
}

TEST_CASE("dichotomy: integral coboundary configuration") {
  LabConfig cfg = parse_config(kMiniCob);
  auto r = dichotomy_report(cfg);
  CHECK(r["verdict"]["class"] == "essential_coboundary");
  CHECK(r["verdict"]["subtype"] == "integral");
  REQUIRE(r["verdict"]["v_integral"].is_array());
  CHECK(r["verdict"]["v_integral"][0] == 1);
  CHECK(r["verdict"]["c_mod1"].get<double>() ==
        doctest::Approx(0.3).epsilon(1e-6));
  CHECK(r["verdict"]["semiconjugacy_residual"].get<double>() <= 1e-6);
  CHECK(r["spectrum"][0]["radius"].get<double>() >= 0.999);
  // a coboundary never produces a contraction time
  CHECK(r["symbol"]["n0"].is_null());
  CHECK(r["symbol"]["per_direction"].size() == 2);
}
