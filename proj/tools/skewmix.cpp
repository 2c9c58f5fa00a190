//---------------------------------------------------------------------------
// skewmix: command line front end
//
//   skewmix <subcommand> --config <path> [overrides]
//
// Exit codes: 0 ok, 2 bad configuration, 3 work budget exceeded, 4 a
// numerical stage failed to converge.
//---------------------------------------------------------------------------

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "skewmix/cobound.hpp"
#include "skewmix/config.hpp"
#include "skewmix/density.hpp"
#include "skewmix/errors.hpp"
#include "skewmix/lab.hpp"
#include "skewmix/symbol.hpp"
#include "skewmix/twisted.hpp"
#include "skewmix/weight_g.hpp"

using nlohmann::json;
using namespace skewmix;

namespace {

void emit_text(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open output file: " + path);
  f << text;
}

void emit_json(const json& j, const std::string& path) {
  emit_text(j.dump(2) + "\n", path);
}

json tau_terms_json(const TrigPoly& u) {
  json out = json::array();
  for (const auto& t : u.terms()) {
    json k = json::array();
    for (int i = 0; i < t.k.size(); ++i) k.push_back(t.k[i]);
    out.push_back({{"k", k}, {"a", t.a}, {"b", t.b}});
  }
  return out;
}

struct NuRange {
  int lo = 1, hi = 0; // hi = 0 means "use config nu_max"
};

NuRange parse_nu_range(const std::string& s) {
  NuRange r;
  if (s.empty()) return r;
  auto colon = s.find(':');
  try {
    if (colon == std::string::npos) {
      r.lo = 1;
      r.hi = std::stoi(s);
    } else {
      r.lo = std::stoi(s.substr(0, colon));
      r.hi = std::stoi(s.substr(colon + 1));
    }
  } catch (const std::exception&) {
    throw ConfigError("bad --nu-range, expected N or LO:HI");
  }
  if (r.lo < 0 || r.hi < r.lo) throw ConfigError("bad --nu-range bounds");
  return r;
}

int run_density(const LabConfig& cfg, const std::string& out,
                const std::string& csv, int grid) {
  ExpandingMap map = build_map(cfg);
  DensityModel h = invariant_density(map);
  if (!csv.empty()) {
    std::string text;
    if (map.dim() == 1) {
      text += "x,h\n";
      Vec x(1);
      for (int i = 0; i < grid; ++i) {
        x[0] = double(i) / grid;
        text += std::to_string(x[0]) + "," + std::to_string(h.eval(x)) + "\n";
      }
    } else {
      text += "x0,x1,h\n";
      Vec x(2);
      for (int i = 0; i < grid; ++i)
        for (int k = 0; k < grid; ++k) {
          x[0] = double(i) / grid;
          x[1] = double(k) / grid;
          text += std::to_string(x[0]) + "," + std::to_string(x[1]) + "," +
                  std::to_string(h.eval(x)) + "\n";
        }
    }
    emit_text(text, csv);
  }
  json j = {{"K", h.K},
            {"dim", h.dim},
            {"min_value", h.min_value},
            {"residual", h.residual}};
  emit_json(j, out);
  return 0;
}

int run_twist_spectrum(const LabConfig& cfg, const std::string& out,
                       const NuRange& range, int K, double s,
                       std::string style_name, int n_norms) {
  ExpandingMap map = build_map(cfg);
  FiberRotation tau = build_tau(cfg);
  if (K <= 0) K = cfg.spectral.K;
  if (std::isnan(s)) s = cfg.spectral.s;
  if (style_name.empty()) style_name = cfg.spectral.weight_style;
  if (n_norms <= 0) n_norms = cfg.spectral.n_norms;
  const auto style = (style_name == "symbol")
                         ? SobolevWeight::Style::SymbolLambda
                         : SobolevWeight::Style::StandardBracket;
  std::optional<WeightG> g;
  if (style == SobolevWeight::Style::SymbolLambda)
    g.emplace(WeightG::build(map, tau));

  int hi = range.hi > 0 ? range.hi : cfg.spectral.nu_max;
  json rows = json::array();
  for (const VecI& nu : canonical_nu_set(tau.fiber_dim(), hi)) {
    if (nu.cwiseAbs().maxCoeff() < range.lo) continue;
    auto res = spectral_radius(map, tau, nu, K, s, style,
                               g ? &*g : nullptr, n_norms);
    json nuj = json::array();
    for (int i = 0; i < nu.size(); ++i) nuj.push_back(nu[i]);
    rows.push_back({{"norms", res.norms},
                    {"nu", nuj},
                    {"radius", res.radius},
                    {"uncertainty", res.uncertainty}});
  }
  emit_json(rows, out);
  return 0;
}

int run_symbol_bound(const LabConfig& cfg, const std::string& out,
                     const std::string& csv, double s, int n_max,
                     double dir_deg, int nxi) {
  ExpandingMap map = build_map(cfg);
  FiberRotation tau = build_tau(cfg);
  DensityModel h = invariant_density(map);
  WeightG g = WeightG::build(map, tau);
  if (std::isnan(s)) s = cfg.symbol.s;
  if (n_max <= 0) n_max = cfg.symbol.n_max;
  if (dir_deg <= 0) dir_deg = cfg.symbol.dir_degrees;
  if (nxi <= 0) nxi = cfg.symbol.nxi;

  auto r = find_n0(map, tau, h, g, s, n_max, cfg.symbol.margin, cfg.symbol.nx,
                   nxi, dir_deg);
  json dirs = json::array();
  for (const auto& dh : r.per_direction) {
    json dd = json::array();
    for (int i = 0; i < dh.dir.size(); ++i) dd.push_back(dh.dir[i]);
    dirs.push_back({{"dir", dd}, {"sup_history", dh.sup_history}});
  }
  json j;
  j["n0"] = r.n0 ? json(*r.n0) : json(nullptr);
  j["ptilde0"] = r.n0 ? json(r.ptilde0) : json(nullptr);
  j["per_direction"] = dirs;
  emit_json(j, out);

  if (!csv.empty()) {
    // grid dump of the field behind the reported sup, first direction
    int n_star = r.n0 ? *r.n0 : n_max;
    Vec dir = r.per_direction.front().dir;
    auto field = ptilde_field(map, tau, h, g, s, dir, n_star, cfg.symbol.nx,
                              nxi, 0.0);
    std::string text = "x,xi,ptilde\n";
    if (map.dim() == 1) {
      for (std::size_t ix = 0; ix < field.x_grid.size(); ++ix)
        for (std::size_t ik = 0; ik < field.xi_grid.size(); ++ik)
          text += std::to_string(field.x_grid[ix]) + "," +
                  std::to_string(field.xi_grid[ik]) + "," +
                  std::to_string(field.values(ix, ik)) + "\n";
    }
    emit_text(text, csv);
  }
  return 0;
}

int run_livsic(const LabConfig& cfg, const std::string& out, int p_max,
               const std::string& mode, int v_max) {
  ExpandingMap map = build_map(cfg);
  FiberRotation tau = build_tau(cfg);
  LivsicOptions lopt;
  if (cfg.livsic.present) {
    lopt.p_max = cfg.livsic.p_max;
    lopt.v_max = cfg.livsic.v_max;
    lopt.orbit_tol_scale = cfg.livsic.orbit_tol_scale;
    lopt.equation_tol = cfg.livsic.equation_tol;
    lopt.grid = cfg.livsic.grid;
    if (cfg.livsic.mode == "real") lopt.mode = LivsicOptions::Mode::Real;
    else if (cfg.livsic.mode == "integral")
      lopt.mode = LivsicOptions::Mode::Integral;
  }
  if (p_max > 0) lopt.p_max = p_max;
  if (v_max > 0) lopt.v_max = v_max;
  if (!mode.empty()) {
    if (mode == "real") lopt.mode = LivsicOptions::Mode::Real;
    else if (mode == "integral") lopt.mode = LivsicOptions::Mode::Integral;
    else if (mode == "both") lopt.mode = LivsicOptions::Mode::Both;
    else throw ConfigError("bad --mode, expected real, integral or both");
  }
  auto cert = livsic(map, tau, lopt);
  if (!cert) {
    emit_json(json(nullptr), out);
    return 0;
  }
  json vv = json::array();
  for (int i = 0; i < cert->v.size(); ++i) vv.push_back(cert->v[i]);
  json j = {{"c", cert->c},
            {"c_mod1", cert->c_mod1},
            {"equation_residual", cert->equation_residual},
            {"orbit_rms", cert->orbit_rms},
            {"u_const", cert->u.constant()},
            {"u_terms", tau_terms_json(cert->u)},
            {"v", vv},
            {"valid", cert->valid}};
  if (cert->v_integral) {
    json vi = json::array();
    for (int i = 0; i < cert->v_integral->size(); ++i)
      vi.push_back((*cert->v_integral)[i]);
    j["v_integral"] = vi;
  } else {
    j["v_integral"] = nullptr;
  }
  emit_json(j, out);
  return 0;
}

int run_correlate(const LabConfig& cfg, const std::string& out,
                  const std::string& csv) {
  if (!cfg.correlate.present || cfg.correlate.phi.empty() ||
      cfg.correlate.psi.empty())
    throw ConfigError("correlate needs [correlate] with phi and psi");
  ExpandingMap map = build_map(cfg);
  FiberRotation tau = build_tau(cfg);
  DensityModel h = invariant_density(map);
  const CorrelateSpec& cs = cfg.correlate;
  Observable phi = make_observable(cs.phi, map.dim(), tau.fiber_dim());
  Observable psi = make_observable(cs.psi, map.dim(), tau.fiber_dim());
  auto series =
      correlation_series(map, tau, h, phi, psi, cs.n_max, cs.gx, cs.gy);

  if (!csv.empty()) {
    std::string text = "n,re,im,abs\n";
    for (std::size_t n = 0; n < series.C.size(); ++n) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", n,
                    series.C[n].real(), series.C[n].imag(), series.abs_C[n]);
      text += buf;
    }
    emit_text(text, csv);
  }

  json j;
  json carr = json::array();
  for (const auto& c : series.C) carr.push_back({c.real(), c.imag()});
  j["C"] = carr;
  j["abs"] = series.abs_C;
  j["mean_phi"] = {series.mean_phi.real(), series.mean_phi.imag()};
  j["mean_psi"] = {series.mean_psi.real(), series.mean_psi.imag()};
  j["window"] = {cs.fit_lo, cs.fit_hi};
  try {
    DecayFit fit =
        fit_decay_rate(series.abs_C, cs.fit_lo, cs.fit_hi, cs.noise_floor);
    j["fit"] = {{"rate", fit.rate},
                {"r2", fit.r2},
                {"log_amp", fit.log_amp},
                {"n_used", fit.n_used}};
  } catch (const WindowTooNoisy&) {
    j["fit"] = {{"error", "window_too_noisy"}};
  }
  emit_json(j, out);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"torus extension mixing laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_path, csv_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file")
        ->required();
    sub->add_option("--out", out_path, "JSON output path (default stdout)");
  };

  auto* cmd_density = app.add_subcommand("density", "invariant density");
  add_common(cmd_density);
  int density_grid = 1024;
  cmd_density->add_option("--grid", density_grid, "CSV sample count");
  cmd_density->add_option("--csv", csv_path, "CSV output path");

  auto* cmd_spec = app.add_subcommand("twist-spectrum", "twisted radii");
  add_common(cmd_spec);
  std::string nu_range_str, style_name;
  int spec_K = 0, spec_norms = 0;
  double spec_s = std::nan("");
  cmd_spec->add_option("--nu-range", nu_range_str, "N or LO:HI");
  cmd_spec->add_option("--K", spec_K, "lattice radius");
  cmd_spec->add_option("--s", spec_s, "Sobolev exponent");
  cmd_spec->add_option("--weight-style", style_name, "standard | symbol");
  cmd_spec->add_option("--n-norms", spec_norms, "norm growth length");

  auto* cmd_sym = app.add_subcommand("symbol-bound", "contraction exponent");
  add_common(cmd_sym);
  double sym_s = std::nan(""), sym_dir = 0;
  int sym_nmax = 0, sym_nxi = 0;
  cmd_sym->add_option("--s", sym_s, "symbol exponent");
  cmd_sym->add_option("--n-max", sym_nmax, "largest iterate to try");
  cmd_sym->add_option("--dir-resolution", sym_dir, "direction step, degrees");
  cmd_sym->add_option("--xi-grid", sym_nxi, "covector grid points");
  cmd_sym->add_option("--csv", csv_path, "CSV field dump path");

  auto* cmd_liv = app.add_subcommand("livsic", "coboundary certificate");
  add_common(cmd_liv);
  int liv_pmax = 0, liv_vmax = 0;
  std::string liv_mode;
  cmd_liv->add_option("--p-max", liv_pmax, "largest orbit period");
  cmd_liv->add_option("--mode", liv_mode, "real | integral | both");
  cmd_liv->add_option("--v-max", liv_vmax, "integral search box");

  auto* cmd_corr = app.add_subcommand("correlate", "correlation decay");
  add_common(cmd_corr);
  cmd_corr->add_option("--csv", csv_path, "CSV output path");

  auto* cmd_dich = app.add_subcommand("dichotomy", "full classification");
  add_common(cmd_dich);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    LabConfig cfg = load_config_file(config_path);
    if (cmd_density->parsed())
      return run_density(cfg, out_path, csv_path, density_grid);
    if (cmd_spec->parsed())
      return run_twist_spectrum(cfg, out_path, parse_nu_range(nu_range_str),
                                spec_K, spec_s, style_name, spec_norms);
    if (cmd_sym->parsed())
      return run_symbol_bound(cfg, out_path, csv_path, sym_s, sym_nmax,
                              sym_dir, sym_nxi);
    if (cmd_liv->parsed())
      return run_livsic(cfg, out_path, liv_pmax, liv_mode, liv_vmax);
    if (cmd_corr->parsed()) return run_correlate(cfg, out_path, csv_path);
    if (cmd_dich->parsed()) {
      emit_json(dichotomy_report(cfg), out_path);
      return 0;
    }
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
