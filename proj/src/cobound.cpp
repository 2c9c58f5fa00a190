#include "skewmix/cobound.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "skewmix/errors.hpp"
#include "skewmix/fft.hpp"

namespace skewmix {

//---------------------------------------------------------------------------
// obstructions
//---------------------------------------------------------------------------

std::vector<Obstruction> collect_obstructions(const ExpandingMap& map,
                                              const FiberRotation& tau,
                                              int p_max) {
  std::vector<Obstruction> out;
  for (const auto& orbit : map.periodic_orbits(p_max)) {
    Obstruction o;
    o.period = orbit.period;
    o.orbit = orbit.points;
    o.sum = Vec::Zero(tau.fiber_dim());
    for (const auto& x : orbit.points) o.sum += tau.eval(x);
    out.push_back(std::move(o));
  }
  return out;
}

//---------------------------------------------------------------------------
// dependence detection
//---------------------------------------------------------------------------

namespace {

// least-squares constant for a fixed direction, and the l2 misfit
std::pair<double, double> fit_c(const std::vector<Obstruction>& obs,
                                const Vec& v) {
  double pp = 0.0, ps = 0.0;
  for (const auto& o : obs) {
    pp += double(o.period) * o.period;
    ps += o.period * v.dot(o.sum);
  }
  double c = ps / pp;
  double r2 = 0.0;
  for (const auto& o : obs) {
    double r = v.dot(o.sum) - c * o.period;
    r2 += r * r;
  }
  return {c, r2};
}

void canonical_sign(Vec& v) {
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-14) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

} // namespace

RealDependence detect_real(const std::vector<Obstruction>& obs, int l) {
  if (int(obs.size()) < l + 2)
    throw ConfigError("dependence detection needs at least l+2 obstructions");

  // eliminate c: with P = sum p^2 and m = sum p s, the misfit for unit v
  // is v^t G v, G = sum (s - (p/P) m)(s - (p/P) m)^t
  double P = 0.0;
  Vec m = Vec::Zero(l);
  for (const auto& o : obs) {
    P += double(o.period) * o.period;
    m += o.period * o.sum;
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(l, l);
  for (const auto& o : obs) {
    Vec t = o.sum - (o.period / P) * m;
    G += Eigen::MatrixXd(t * t.transpose());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  Eigen::VectorXd v0 = es.eigenvectors().col(0); // smallest eigenvalue
  Vec v(l);
  for (int i = 0; i < l; ++i) v[i] = v0[i];
  canonical_sign(v);

  RealDependence dep;
  dep.v = v;
  auto [c, r2] = fit_c(obs, v);
  dep.c = c;
  dep.rms_residual = std::sqrt(r2 / double(obs.size()));
  return dep;
}

std::optional<IntegralDependence> detect_integral(
    const std::vector<Obstruction>& obs, int l, int v_max, double tol_scale) {
  if (int(obs.size()) < l + 2)
    throw ConfigError("dependence detection needs at least l+2 obstructions");

  double period_sum = 0.0;
  for (const auto& o : obs) period_sum += o.period;

  std::optional<IntegralDependence> best;
  std::vector<int> idx(l, -v_max);
  while (true) {
    VecI v(l);
    for (int i = 0; i < l; ++i) v[i] = idx[i];
    bool zero = true;
    for (int i = 0; i < l; ++i) zero &= v[i] == 0;
    if (!zero) {
      // gcd-reduced, canonical sign; skip non-primitive representatives
      int g = 0;
      for (int i = 0; i < l; ++i) g = std::gcd(g, std::abs(v[i]));
      bool primitive = g == 1;
      int first = 0;
      while (first < l && v[first] == 0) ++first;
      if (primitive && v[first] > 0) {
        Vec vd(l);
        for (int i = 0; i < l; ++i) vd[i] = v[i];
        auto [c, r2] = fit_c(obs, vd);
        double res = std::sqrt(r2) / vd.norm();
        if (!best || res < best->residual) {
          IntegralDependence d;
          d.v = v;
          d.c = c;
          d.residual = res;
          best = d;
        }
      }
    }
    int i = l - 1;
    while (i >= 0 && idx[i] == v_max) idx[i--] = -v_max;
    if (i < 0) break;
    ++idx[i];
  }
  if (best && best->residual <= tol_scale * period_sum) return best;
  return std::nullopt;
}

//---------------------------------------------------------------------------
// the backward derivative series
//---------------------------------------------------------------------------

VFieldSamples vfield(const ExpandingMap& map, const FiberRotation& tau,
                     const Vec& v, int grid) {
  const int d = map.dim();
  VFieldSamples f;
  f.grid = grid;
  f.dim = d;
  f.v = v;

  const double gam = map.gamma();
  const double coef_bound = tau.dtau_sup() * v.norm();
  // truncate once the geometric tail is negligible
  int depth = 1;
  while (coef_bound * std::pow(gam, -double(depth)) / (1.0 - 1.0 / gam) >
             1e-15 &&
         depth < 400)
    ++depth;
  f.tail_bound = coef_bound * std::pow(gam, -double(depth)) / (1.0 - 1.0 / gam);

  const std::size_t total = (d == 1) ? grid : std::size_t(grid) * grid;
  f.values.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    Vec x(d);
    if (d == 1) {
      x[0] = double(i) / grid;
    } else {
      x[0] = double(i / grid) / grid;
      x[1] = double(i % grid) / grid;
    }
    // descend one branch chain; the limit does not depend on the choice
    Vec acc = Vec::Zero(d);
    Mat Binv = Mat::Identity(d, d);
    Vec z = x;
    for (int j = 1; j <= depth; ++j) {
      z = map.inverse_branch(z, 0);
      Binv = Binv * map.jacobian(z).transpose().inverse();
      acc += Binv * (tau.jacobian(z).transpose() * v);
    }
    f.values[i] = acc;
  }
  return f;
}

ExactnessReport check_exactness(const VFieldSamples& f, double tol) {
  ExactnessReport r;
  if (f.dim == 1) {
    double loop = 0.0;
    for (const auto& val : f.values) loop += val[0];
    r.loop_max = std::abs(loop / double(f.grid));
  } else {
    // axis loops: each row integrates the x2-component, each column the
    // x1-component; an exact gradient zeroes them all
    double worst = 0.0;
    const int G = f.grid;
    for (int i = 0; i < G; ++i) {
      double l2 = 0.0;
      for (int j = 0; j < G; ++j) l2 += f.values[std::size_t(i) * G + j][1];
      worst = std::max(worst, std::abs(l2 / G));
    }
    for (int j = 0; j < G; ++j) {
      double l1 = 0.0;
      for (int i = 0; i < G; ++i) l1 += f.values[std::size_t(i) * G + j][0];
      worst = std::max(worst, std::abs(l1 / G));
    }
    r.loop_max = worst;
  }
  r.exact = r.loop_max <= tol;
  return r;
}

TrigPoly reconstruct_u(const VFieldSamples& f, double loop_tol, int K_keep) {
  auto ex = check_exactness(f, loop_tol);
  if (!ex.exact)
    throw NotExact("field is not an exact gradient: loop integral " +
                   std::to_string(ex.loop_max));

  const int G = f.grid;
  TrigPoly u(f.dim, 0.0);
  if (f.dim == 1) {
    std::vector<cplx> vs(G);
    for (int i = 0; i < G; ++i) vs[i] = f.values[i][0];
    auto dft = fft_1d(vs);
    const int Km = std::min(K_keep, G / 2 - 1);
    for (int k = 1; k <= Km; ++k) {
      cplx uk = (dft[k] / double(G)) / cplx(0.0, kTwoPi * k);
      if (std::abs(uk) < 1e-15) continue;
      VecI kk(1);
      kk[0] = k;
      u.add_term(kk, 2.0 * uk.real(), -2.0 * uk.imag());
    }
  } else {
    std::vector<cplx> v1(std::size_t(G) * G), v2(v1.size());
    for (std::size_t i = 0; i < v1.size(); ++i) {
      v1[i] = f.values[i][0];
      v2[i] = f.values[i][1];
    }
    auto d1 = fft_2d(v1, G, G);
    auto d2 = fft_2d(v2, G, G);
    const int Km = std::min(K_keep, G / 2 - 1);
    const double norm = double(G) * G;
    for (int k1 = -Km; k1 <= Km; ++k1)
      for (int k2 = -Km; k2 <= Km; ++k2) {
        if (k1 == 0 && k2 == 0) continue;
        // skip conjugate duplicates; add_term canonicalizes the sign
        if (k1 < 0 || (k1 == 0 && k2 < 0)) continue;
        std::size_t at = std::size_t((k1 % G + G) % G) * G +
                         ((k2 % G + G) % G);
        cplx uk = (k1 != 0) ? (d1[at] / norm) / cplx(0.0, kTwoPi * k1)
                            : (d2[at] / norm) / cplx(0.0, kTwoPi * k2);
        if (std::abs(uk) < 1e-15) continue;
        VecI kk(2);
        kk << k1, k2;
        u.add_term(kk, 2.0 * uk.real(), -2.0 * uk.imag());
      }
  }
  // normalize u(0) = 0
  double u0 = u.eval(Vec::Zero(f.dim));
  u.set_constant(u.constant() - u0);
  return u;
}

//---------------------------------------------------------------------------
// the pipeline
//---------------------------------------------------------------------------

std::optional<CoboundaryCertificate> livsic(const ExpandingMap& map,
                                            const FiberRotation& tau,
                                            const LivsicOptions& opt) {
  const int l = tau.fiber_dim();
  auto obs = collect_obstructions(map, tau, opt.p_max);

  std::optional<VecI> v_int;
  Vec v;
  double c = 0.0, orbit_rms = 0.0;
  bool found = false;

  if (opt.mode != LivsicOptions::Mode::Real) {
    if (auto d = detect_integral(obs, l, opt.v_max, opt.orbit_tol_scale)) {
      v_int = d->v;
      v = Vec(l);
      for (int i = 0; i < l; ++i) v[i] = d->v[i];
      c = d->c;
      orbit_rms = d->residual;
      found = true;
    }
  }
  if (!found && opt.mode != LivsicOptions::Mode::Integral) {
    auto d = detect_real(obs, l);
    if (d.rms_residual < opt.real_reject) {
      v = d.v;
      c = d.c;
      orbit_rms = d.rms_residual;
      found = true;
    }
  }
  if (!found) return std::nullopt;

  auto field = vfield(map, tau, v, opt.grid);
  auto ex = check_exactness(field);
  if (!ex.exact) return std::nullopt; // obstruction fit was a mirage

  // the bounded section is xi* = -V, so u grows along -V
  VFieldSamples neg = field;
  for (auto& val : neg.values) val = -val;
  CoboundaryCertificate cert;
  cert.u = reconstruct_u(neg, 1e-10, opt.K_u);
  cert.v = v;
  cert.v_integral = v_int;
  cert.c = c;
  cert.c_mod1 = wrap01(c);
  cert.orbit_rms = orbit_rms;

  double res = 0.0;
  Vec x(map.dim());
  const int Gr = opt.grid;
  std::vector<int> idx(map.dim(), 0);
  while (true) {
    for (int i = 0; i < map.dim(); ++i) x[i] = double(idx[i]) / Gr;
    double lhs = v.dot(tau.eval(x)) - c - cert.u.eval(x) +
                 cert.u.eval(map.eval(x));
    res = std::max(res, std::abs(lhs));
    int i = map.dim() - 1;
    while (i >= 0 && ++idx[i] == Gr) idx[i--] = 0;
    if (i < 0) break;
  }
  cert.equation_residual = res;
  cert.valid = res <= opt.equation_tol;
  return cert;
}

Semiconjugacy build_semiconjugacy(const ExpandingMap& map,
                                  const FiberRotation& tau,
                                  const CoboundaryCertificate& cert, int gx,
                                  int gy) {
  if (!cert.v_integral)
    throw NotIntegral("semiconjugacy needs an integral dependence direction");
  const int d = map.dim(), l = tau.fiber_dim();
  Vec v(l);
  for (int i = 0; i < l; ++i) v[i] = double((*cert.v_integral)[i]);

  auto pi = [&](const Vec& x, const Vec& y) {
    return wrap01(v.dot(y) + cert.u.eval(x));
  };

  double res = 0.0;
  std::vector<int> ix(d, 0);
  while (true) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = double(ix[i]) / gx;
    Vec Tx = map.eval(x);
    Vec tv = tau.eval(x);
    std::vector<int> iy(l, 0);
    while (true) {
      Vec y(l);
      for (int i = 0; i < l; ++i) y[i] = double(iy[i]) / gy;
      Vec y2 = y + tv;
      res = std::max(res, torus_dist(pi(Tx, y2), wrap01(pi(x, y) + cert.c)));
      int i = l - 1;
      while (i >= 0 && ++iy[i] == gy) iy[i--] = 0;
      if (i < 0) break;
    }
    int i = d - 1;
    while (i >= 0 && ++ix[i] == gx) ix[i--] = 0;
    if (i < 0) break;
  }
  return {res, cert.c, cert.c_mod1};
}

} // namespace skewmix
