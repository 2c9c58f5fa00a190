#include "skewmix/lab.hpp"

#include <algorithm>
#include <cmath>

#include "skewmix/errors.hpp"
#include "skewmix/symbol.hpp"
#include "skewmix/twisted.hpp"
#include "skewmix/weight_g.hpp"

namespace skewmix {

namespace {

// radius must clear 1 by this margin before a frequency counts as
// contracted; mirrors the margin used by the symbol stage
constexpr double kRadiusGate = 1e-3;

double dot_ix(const VecI& k, const double* x) {
  double s = 0.0;
  for (int j = 0; j < k.size(); ++j) s += double(k[j]) * x[j];
  return s;
}

} // namespace

Observable make_observable(const std::vector<ObsTermSpec>& specs, int d,
                           int l) {
  if (specs.empty())
    throw ConfigError("observable needs at least one term");
  Observable obs;
  obs.d = d;
  obs.l = l;
  for (const auto& t : specs) {
    if (int(t.k.size()) != d || int(t.nu.size()) != l)
      throw ConfigError("observable term has wrong frequency dimensions");
    Observable::Term term;
    term.k = VecI(d);
    for (int i = 0; i < d; ++i) term.k[i] = t.k[i];
    term.nu = VecI(l);
    for (int i = 0; i < l; ++i) term.nu[i] = t.nu[i];
    term.c = cplx(t.re, t.im);
    obs.terms.push_back(term);
  }
  return obs;
}

CorrelationSeries correlation_series(const ExpandingMap& map,
                                     const FiberRotation& tau,
                                     const DensityModel& h,
                                     const Observable& phi,
                                     const Observable& psi, int n_max,
                                     long gx, int gy) {
  const int d = map.dim();
  const int l = tau.fiber_dim();
  if (phi.d != d || psi.d != d || phi.l != l || psi.l != l)
    throw ConfigError("observable dimensions do not match the system");
  if (phi.terms.empty() || psi.terms.empty())
    throw ConfigError("observables must have at least one term");
  if (n_max < 1) throw ConfigError("correlation needs n_max >= 1");
  if (gx < 16) throw ConfigError("base grid too small");
  if (d == 2 && gx > 4096) throw ConfigError("base grid too large for d = 2");

  // the uniform fiber grid integrates e^{2 pi i nu.y} to the exact
  // Kronecker delta only below the per-axis Nyquist frequency
  int nu_sup = 0;
  for (const auto& t : phi.terms)
    nu_sup = std::max(nu_sup, int(t.nu.cwiseAbs().maxCoeff()));
  for (const auto& t : psi.terms)
    nu_sup = std::max(nu_sup, int(t.nu.cwiseAbs().maxCoeff()));
  if (2 * nu_sup >= gy)
    throw ConfigError("fiber grid gy must exceed twice the largest |nu|");

  const long N = (d == 1) ? gx : gx * gx;
  std::vector<double> x(std::size_t(N) * d);
  if (d == 1) {
    for (long i = 0; i < N; ++i) x[i] = double(i) / double(gx);
  } else {
    for (long i0 = 0; i0 < gx; ++i0)
      for (long i1 = 0; i1 < gx; ++i1) {
        long i = i0 * gx + i1;
        x[2 * i] = double(i0) / double(gx);
        x[2 * i + 1] = double(i1) / double(gx);
      }
  }

  std::vector<double> w(N);
  double tot = 0.0;
  {
    Vec xv(d);
    for (long i = 0; i < N; ++i) {
      for (int j = 0; j < d; ++j) xv[j] = x[std::size_t(i) * d + j];
      w[i] = h.eval(xv);
      tot += w[i];
    }
  }
  for (long i = 0; i < N; ++i) w[i] /= tot;

  // group the psi terms by fiber frequency; each group becomes one cached
  // weighted base profile G_nu(x) = w(x) sum_b conj(c_b) e^{-2 pi i k_b.x}
  std::vector<VecI> group_nu;
  std::vector<std::vector<cplx>> G;
  for (const auto& b : psi.terms) {
    int gidx = -1;
    for (std::size_t g = 0; g < group_nu.size(); ++g)
      if (group_nu[g] == b.nu) {
        gidx = int(g);
        break;
      }
    if (gidx < 0) {
      group_nu.push_back(b.nu);
      G.emplace_back(std::size_t(N), cplx(0.0, 0.0));
      gidx = int(group_nu.size()) - 1;
    }
    auto& arr = G[gidx];
    const cplx cb = std::conj(b.c);
    for (long i = 0; i < N; ++i) {
      double ang = -kTwoPi * dot_ix(b.k, &x[std::size_t(i) * d]);
      arr[i] += cb * cplx(std::cos(ang), std::sin(ang));
    }
  }
  for (auto& arr : G)
    for (long i = 0; i < N; ++i) arr[i] *= w[i];

  auto mean_of = [&](const Observable& obs) {
    cplx m(0.0, 0.0);
    for (const auto& t : obs.terms) {
      if (t.nu.cwiseAbs().maxCoeff() != 0) continue; // fiber integral kills it
      cplx acc(0.0, 0.0);
      for (long i = 0; i < N; ++i) {
        double ang = kTwoPi * dot_ix(t.k, &x[std::size_t(i) * d]);
        acc += w[i] * cplx(std::cos(ang), std::sin(ang));
      }
      m += t.c * acc;
    }
    return m;
  };

  CorrelationSeries out;
  out.gx = gx;
  out.gy = gy;
  out.mean_phi = mean_of(phi);
  out.mean_psi = mean_of(psi);
  const cplx mm = out.mean_phi * std::conj(out.mean_psi);

  std::vector<double> S(std::size_t(N) * l, 0.0);
  out.C.resize(n_max + 1);
  out.abs_C.resize(n_max + 1);

  Vec xv(d);
  for (int n = 0; n <= n_max; ++n) {
    cplx raw(0.0, 0.0);
    for (const auto& a : phi.terms) {
      int gidx = -1;
      for (std::size_t g = 0; g < group_nu.size(); ++g)
        if (group_nu[g] == a.nu) {
          gidx = int(g);
          break;
        }
      if (gidx < 0) continue; // no matching fiber frequency in psi
      const auto& arr = G[gidx];
      cplx acc(0.0, 0.0);
      for (long i = 0; i < N; ++i) {
        double ang = kTwoPi * (dot_ix(a.k, &x[std::size_t(i) * d]) +
                               dot_ix(a.nu, &S[std::size_t(i) * l]));
        acc += arr[i] * cplx(std::cos(ang), std::sin(ang));
      }
      raw += a.c * acc;
    }
    out.C[n] = raw - mm;
    out.abs_C[n] = std::abs(out.C[n]);

    if (n == n_max) break;
    for (long i = 0; i < N; ++i) {
      for (int j = 0; j < d; ++j) xv[j] = x[std::size_t(i) * d + j];
      Vec tv = tau.eval(xv);
      for (int j = 0; j < l; ++j) S[std::size_t(i) * l + j] += tv[j];
      Vec nx = map.eval(xv);
      for (int j = 0; j < d; ++j) x[std::size_t(i) * d + j] = nx[j];
    }
  }
  return out;
}

DecayFit fit_decay_rate(const std::vector<double>& abs_C, int lo, int hi,
                        double noise_floor) {
  if (lo < 0 || hi >= int(abs_C.size()) || hi <= lo)
    throw ConfigError("fit window out of range");
  std::vector<double> ns, ys;
  for (int n = lo; n <= hi; ++n) {
    if (abs_C[n] > noise_floor) {
      ns.push_back(double(n));
      ys.push_back(std::log(abs_C[n]));
    }
  }
  if (ns.size() < 5)
    throw WindowTooNoisy("fewer than 5 points above the noise floor in [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
  const std::size_t m = ns.size();
  double sn = 0, sy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sn += ns[i];
    sy += ys[i];
  }
  const double nbar = sn / double(m), ybar = sy / double(m);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (ns[i] - nbar) * (ns[i] - nbar);
    sxy += (ns[i] - nbar) * (ys[i] - ybar);
  }
  const double slope = sxy / sxx;
  const double icept = ybar - slope * nbar;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double pred = icept + slope * ns[i];
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - ybar) * (ys[i] - ybar);
  }
  DecayFit fit;
  fit.rate = std::exp(slope);
  fit.r2 = (ss_tot < 1e-30) ? 0.0 : 1.0 - ss_res / ss_tot;
  fit.log_amp = icept;
  fit.n_used = int(m);
  fit.lo = lo;
  fit.hi = hi;
  return fit;
}

std::vector<VecI> canonical_nu_set(int l, int nu_max) {
  std::vector<VecI> out;
  if (l == 1) {
    for (int n = 1; n <= nu_max; ++n) {
      VecI v(1);
      v << n;
      out.push_back(v);
    }
    return out;
  }
  for (int a = 0; a <= nu_max; ++a)
    for (int b = -nu_max; b <= nu_max; ++b) {
      if (a == 0 && b <= 0) continue; // zero and mirrored representatives
      VecI v(2);
      v << a, b;
      out.push_back(v);
    }
  std::sort(out.begin(), out.end(), [](const VecI& p, const VecI& q) {
    if (p[0] != q[0]) return p[0] < q[0];
    return p[1] < q[1];
  });
  return out;
}

nlohmann::json dichotomy_report(const LabConfig& cfg) {
  using nlohmann::json;

  ExpandingMap map = build_map(cfg);
  FiberRotation tau = build_tau(cfg);
  DensityModel h = invariant_density(map);
  WeightG g = WeightG::build(map, tau);
  const int l = tau.fiber_dim();

  json j;
  j["config_echo"] = serialize_config(cfg);
  j["seed"] = cfg.seed;
  j["map"] = {{"kind", cfg.map.kind},
              {"dim", map.dim()},
              {"degree", map.degree()},
              {"gamma", map.gamma()}};
  j["tau"] = {{"fiber_dim", l}, {"dtau_sup", tau.dtau_sup()}};

  //-- coboundary search -----------------------------------------------
  LivsicOptions lopt;
  if (cfg.livsic.present) {
    lopt.p_max = cfg.livsic.p_max;
    lopt.v_max = cfg.livsic.v_max;
    lopt.orbit_tol_scale = cfg.livsic.orbit_tol_scale;
    lopt.equation_tol = cfg.livsic.equation_tol;
    lopt.grid = cfg.livsic.grid;
    if (cfg.livsic.mode == "real")
      lopt.mode = LivsicOptions::Mode::Real;
    else if (cfg.livsic.mode == "integral")
      lopt.mode = LivsicOptions::Mode::Integral;
    else
      lopt.mode = LivsicOptions::Mode::Both;
  }
  auto obs = collect_obstructions(map, tau, lopt.p_max);
  auto cert = livsic(map, tau, lopt);

  json jliv;
  jliv["p_max"] = lopt.p_max;
  jliv["mode"] = cfg.livsic.present ? cfg.livsic.mode : "both";
  jliv["obstruction_count"] = int(obs.size());
  if (cert) {
    json jc;
    jc["c"] = cert->c;
    jc["c_mod1"] = cert->c_mod1;
    jc["equation_residual"] = cert->equation_residual;
    jc["orbit_rms"] = cert->orbit_rms;
    jc["valid"] = cert->valid;
    json vv = json::array();
    for (int i = 0; i < cert->v.size(); ++i) vv.push_back(cert->v[i]);
    jc["v"] = vv;
    if (cert->v_integral) {
      json vi = json::array();
      for (int i = 0; i < cert->v_integral->size(); ++i)
        vi.push_back((*cert->v_integral)[i]);
      jc["v_integral"] = vi;
    } else {
      jc["v_integral"] = nullptr;
    }
    jliv["certificate"] = jc;
  } else {
    jliv["certificate"] = nullptr;
  }
  j["livsic"] = jliv;

  //-- twisted spectra ---------------------------------------------------
  const SpectralSpec& sp = cfg.spectral; // struct defaults apply if absent
  const auto style = (sp.weight_style == "symbol")
                         ? SobolevWeight::Style::SymbolLambda
                         : SobolevWeight::Style::StandardBracket;
  auto nus = canonical_nu_set(l, sp.nu_max);
  json rows = json::array();
  std::vector<std::pair<VecI, double>> radii;
  bool all_contracted = true;
  std::string worst;
  double worst_radius = 0.0;
  for (const VecI& nu : nus) {
    auto res = spectral_radius(map, tau, nu, sp.K, sp.s, style, &g, sp.n_norms);
    json nuj = json::array();
    for (int i = 0; i < nu.size(); ++i) nuj.push_back(nu[i]);
    json row;
    row["K"] = res.K;
    row["aliasing_warning"] = res.aliasing_warning;
    row["gelfand"] = res.gelfand;
    row["lead_eig"] = {{"mod", std::abs(res.lead)}, {"arg", std::arg(res.lead)}};
    row["norms"] = res.norms;
    row["nu"] = nuj;
    row["radius"] = res.radius;
    row["uncertainty"] = res.uncertainty;
    rows.push_back(row);
    radii.push_back({nu, res.radius});
    if (!(res.radius < 1.0 - kRadiusGate)) {
      all_contracted = false;
      if (res.radius > worst_radius) {
        worst_radius = res.radius;
        worst = nuj.dump();
      }
    }
  }
  j["spectrum"] = rows;

  //-- symbol contraction ------------------------------------------------
  const SymbolSpec& sy = cfg.symbol;
  auto n0r = find_n0(map, tau, h, g, sy.s, sy.n_max, sy.margin, sy.nx, sy.nxi,
                     sy.dir_degrees);
  json jsym;
  jsym["R"] = n0r.R;
  jsym["margin"] = n0r.margin;
  jsym["n_max"] = sy.n_max;
  if (n0r.n0) {
    jsym["n0"] = *n0r.n0;
    jsym["ptilde0"] = n0r.ptilde0;
    // per-iterate indicator; descriptive, not a certified rate
    jsym["contraction_indicator"] =
        std::exp(std::log(n0r.ptilde0) / (2.0 * double(*n0r.n0)));
  } else {
    jsym["n0"] = nullptr;
    jsym["ptilde0"] = nullptr;
    jsym["contraction_indicator"] = nullptr;
  }
  json dirs = json::array();
  for (const auto& dh : n0r.per_direction) {
    json dd = json::array();
    for (int i = 0; i < dh.dir.size(); ++i) dd.push_back(dh.dir[i]);
    dirs.push_back({{"dir", dd}, {"sup_history", dh.sup_history}});
  }
  jsym["per_direction"] = dirs;
  j["symbol"] = jsym;

  //-- correlation decay ---------------------------------------------------
  json jcorr = nullptr;
  if (cfg.correlate.present && !cfg.correlate.phi.empty() &&
      !cfg.correlate.psi.empty()) {
    const CorrelateSpec& cs = cfg.correlate;
    Observable phi = make_observable(cs.phi, map.dim(), l);
    Observable psi = make_observable(cs.psi, map.dim(), l);
    auto series =
        correlation_series(map, tau, h, phi, psi, cs.n_max, cs.gx, cs.gy);
    jcorr = json::object();
    json carr = json::array();
    for (const cplx& c : series.C) carr.push_back({c.real(), c.imag()});
    jcorr["C"] = carr;
    jcorr["abs"] = series.abs_C;
    jcorr["gx"] = cs.gx;
    jcorr["gy"] = cs.gy;
    jcorr["n_max"] = cs.n_max;
    jcorr["mean_phi"] = {series.mean_phi.real(), series.mean_phi.imag()};
    jcorr["mean_psi"] = {series.mean_psi.real(), series.mean_psi.imag()};
    jcorr["window"] = {cs.fit_lo, cs.fit_hi};
    try {
      DecayFit fit =
          fit_decay_rate(series.abs_C, cs.fit_lo, cs.fit_hi, cs.noise_floor);
      jcorr["fit"] = {{"rate", fit.rate},
                      {"r2", fit.r2},
                      {"log_amp", fit.log_amp},
                      {"n_used", fit.n_used}};
    } catch (const WindowTooNoisy&) {
      jcorr["fit"] = {{"error", "window_too_noisy"}};
    }
  }
  j["correlation"] = jcorr;

  //-- verdict -----------------------------------------------------------
  json jv;
  std::vector<std::string> notes;
  std::string cls;
  jv["subtype"] = nullptr;
  jv["c"] = nullptr;
  jv["c_mod1"] = nullptr;
  jv["v"] = nullptr;
  jv["v_integral"] = nullptr;
  jv["semiconjugacy_residual"] = nullptr;

  const bool cert_ok = cert.has_value() && cert->valid;
  if (cert_ok) {
    jv["c"] = cert->c;
    jv["c_mod1"] = cert->c_mod1;
    json vv = json::array();
    for (int i = 0; i < cert->v.size(); ++i) vv.push_back(cert->v[i]);
    jv["v"] = vv;
    if (cert->v_integral) {
      const VecI& vi = *cert->v_integral;
      json vij = json::array();
      for (int i = 0; i < vi.size(); ++i) vij.push_back(vi[i]);
      jv["v_integral"] = vij;
      bool conflict = false;
      for (const auto& [nu, r] : radii)
        if (nu.size() == vi.size() && nu == vi && r < 1.0 - kRadiusGate)
          conflict = true;
      if (conflict) {
        cls = "inconclusive";
        notes.push_back(
            "integral certificate direction lies in the probed frequency set "
            "but its twisted radius is contracted; evidence is contradictory");
      } else {
        cls = "essential_coboundary";
        jv["subtype"] = "integral";
        Semiconjugacy semi = build_semiconjugacy(map, tau, *cert);
        jv["semiconjugacy_residual"] = semi.residual;
      }
    } else {
      cls = "essential_coboundary";
      jv["subtype"] = "non_integral";
      notes.push_back(
          "certificate direction is not integral; arbitrarily small "
          "parameter changes can destroy mixing");
    }
  } else {
    if (cert && !cert->valid)
      notes.push_back(
          "a dependence direction passed the orbit screen but failed the "
          "functional equation");
    if (all_contracted) {
      cls = "exponential_mixing";
    } else {
      cls = "inconclusive";
      notes.push_back("twisted radius within margin of 1 at nu = " + worst +
                      " without a coboundary certificate");
    }
  }
  jv["class"] = cls;
  jv["notes"] = notes;
  j["verdict"] = jv;
  return j;
}

} // namespace skewmix
