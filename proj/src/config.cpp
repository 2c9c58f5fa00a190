#include "skewmix/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "skewmix/errors.hpp"

namespace skewmix {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_semi(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ';') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

long long to_int(const std::string& tok, int line) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    fail(line, "expected integer, got '" + tok + "'");
  }
  if (pos != tok.size()) fail(line, "expected integer, got '" + tok + "'");
  return v;
}

double to_double(const std::string& tok, int line) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    fail(line, "expected number, got '" + tok + "'");
  }
  if (pos != tok.size()) fail(line, "expected number, got '" + tok + "'");
  return v;
}

struct RawEntry {
  std::string key, value;
  int line;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<ObsTermSpec> parse_obs(const std::string& value, int line, int d,
                                   int l) {
  std::vector<ObsTermSpec> out;
  for (const std::string& chunk : split_semi(value)) {
    auto toks = split_ws(chunk);
    if (toks.empty()) fail(line, "empty observable term");
    if (static_cast<int>(toks.size()) != d + l + 2)
      fail(line, "observable term needs " + std::to_string(d + l + 2) +
                     " numbers (k nu re im), got " +
                     std::to_string(toks.size()));
    ObsTermSpec t;
    int p = 0;
    for (int i = 0; i < d; ++i)
      t.k.push_back(static_cast<int>(to_int(toks[p++], line)));
    for (int i = 0; i < l; ++i)
      t.nu.push_back(static_cast<int>(to_int(toks[p++], line)));
    t.re = to_double(toks[p++], line);
    t.im = to_double(toks[p++], line);
    out.push_back(t);
  }
  return out;
}

} // namespace

LabConfig parse_config(const std::string& text) {
  // Pass 1: collect raw (section, key, value) triples.
  std::vector<std::pair<std::string, RawEntry>> raw;
  std::string section;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "map" && section != "tau" && section != "spectral" &&
          section != "symbol" && section != "livsic" &&
          section != "correlate")
        fail(lineno, "unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(lineno, "empty key");
    raw.push_back({section, {key, value, lineno}});
  }

  LabConfig cfg;

  // Pass 2a: map and tau first; observable syntax depends on their dims.
  bool saw_kind = false;
  for (auto& [sec, e] : raw) {
    if (sec == "map") {
      if (e.key == "kind") {
        cfg.map.kind = e.value;
        if (e.value != "doubling" && e.value != "tripling" &&
            e.value != "linear" && e.value != "perturbed")
          fail(e.line, "unknown map kind '" + e.value + "'");
        saw_kind = true;
      } else if (e.key == "matrix") {
        cfg.map.matrix.clear();
        for (const std::string& row : split_semi(e.value)) {
          std::vector<int> r;
          for (auto& t : split_ws(row))
            r.push_back(static_cast<int>(to_int(t, e.line)));
          if (r.empty()) fail(e.line, "empty matrix row");
          cfg.map.matrix.push_back(r);
        }
        int n = static_cast<int>(cfg.map.matrix.size());
        for (auto& r : cfg.map.matrix)
          if (static_cast<int>(r.size()) != n)
            fail(e.line, "matrix must be square");
        if (n < 1 || n > 2) fail(e.line, "matrix dimension must be 1 or 2");
      } else if (e.key == "N0") {
        cfg.map.N0 = static_cast<int>(to_int(e.value, e.line));
        if (cfg.map.N0 < 2) fail(e.line, "N0 must be >= 2");
      } else if (e.key == "pterm") {
        auto toks = split_ws(e.value);
        if (toks.size() != 3) fail(e.line, "pterm needs: k a b");
        cfg.map.pterms.push_back({double(to_int(toks[0], e.line)),
                                  to_double(toks[1], e.line),
                                  to_double(toks[2], e.line)});
      } else {
        fail(e.line, "unknown key '" + e.key + "' in [map]");
      }
    } else if (sec == "tau") {
      if (e.key == "fiber_dim") {
        cfg.tau.fiber_dim = static_cast<int>(to_int(e.value, e.line));
        if (cfg.tau.fiber_dim < 1 || cfg.tau.fiber_dim > 2)
          fail(e.line, "fiber_dim must be 1 or 2");
      } else if (e.key == "const" || e.key == "term") {
        // handled in pass 2b once fiber_dim is settled
      } else {
        fail(e.line, "unknown key '" + e.key + "' in [tau]");
      }
    }
  }
  if (!saw_kind) throw ConfigError("config: [map] kind is required");
  if (cfg.map.kind == "linear" && cfg.map.matrix.empty())
    throw ConfigError("config: linear map needs a matrix");

  int d = 1;
  if (cfg.map.kind == "linear") d = static_cast<int>(cfg.map.matrix.size());
  int l = cfg.tau.fiber_dim;

  // Pass 2b: everything whose shape depends on (d, l).
  for (auto& [sec, e] : raw) {
    if (sec == "tau") {
      if (e.key == "const") {
        auto toks = split_ws(e.value);
        if (toks.size() != 2) fail(e.line, "const needs: comp value");
        int comp = static_cast<int>(to_int(toks[0], e.line));
        if (comp < 1 || comp > l) fail(e.line, "component out of range");
        cfg.tau.consts.push_back({comp, to_double(toks[1], e.line)});
      } else if (e.key == "term") {
        auto toks = split_ws(e.value);
        if (static_cast<int>(toks.size()) != 1 + d + 2)
          fail(e.line, "term needs: comp k(" + std::to_string(d) + ") a b");
        TauTermSpec t;
        t.comp = static_cast<int>(to_int(toks[0], e.line));
        if (t.comp < 1 || t.comp > l) fail(e.line, "component out of range");
        for (int i = 0; i < d; ++i)
          t.k.push_back(static_cast<int>(to_int(toks[1 + i], e.line)));
        t.a = to_double(toks[1 + d], e.line);
        t.b = to_double(toks[2 + d], e.line);
        cfg.tau.terms.push_back(t);
      }
    } else if (sec == "spectral") {
      cfg.spectral.present = true;
      if (e.key == "K")
        cfg.spectral.K = static_cast<int>(to_int(e.value, e.line));
      else if (e.key == "s")
        cfg.spectral.s = to_double(e.value, e.line);
      else if (e.key == "weight_style") {
        if (e.value != "standard" && e.value != "symbol")
          fail(e.line, "weight_style must be standard or symbol");
        cfg.spectral.weight_style = e.value;
      } else if (e.key == "nu_max")
        cfg.spectral.nu_max = static_cast<int>(to_int(e.value, e.line));
      else if (e.key == "n_norms")
        cfg.spectral.n_norms = static_cast<int>(to_int(e.value, e.line));
      else
        fail(e.line, "unknown key '" + e.key + "' in [spectral]");
    } else if (sec == "symbol") {
      cfg.symbol.present = true;
      if (e.key == "s")
        cfg.symbol.s = to_double(e.value, e.line);
      else if (e.key == "n_max")
        cfg.symbol.n_max = static_cast<int>(to_int(e.value, e.line));
      else if (e.key == "margin")
        cfg.symbol.margin = to_double(e.value, e.line);
      else if (e.key == "nx")
        cfg.symbol.nx = static_cast<int>(to_int(e.value, e.line));
      else if (e.key == "nxi")
        cfg.symbol.nxi = static_cast<int>(to_int(e.value, e.line));
      else if (e.key == "dir_degrees")
        cfg.symbol.dir_degrees = to_double(e.value, e.line);
      else
        fail(e.line, "unknown key '" + e.key + "' in [symbol]");
    } else if (sec == "livsic") {
      cfg.livsic.present = true;
      if (e.key == "p_max")
        cfg.livsic.p_max = static_cast<int>(to_int(e.value, e.line));
      else if (e.key == "mode") {
        if (e.value != "real" && e.value != "integral" && e.value != "both")
          fail(e.line, "mode must be real, integral or both");
        cfg.livsic.mode = e.value;
      } else if (e.key == "v_max")
        cfg.livsic.v_max = static_cast<int>(to_int(e.value, e.line));
      else if (e.key == "orbit_tol_scale")
        cfg.livsic.orbit_tol_scale = to_double(e.value, e.line);
      else if (e.key == "equation_tol")
        cfg.livsic.equation_tol = to_double(e.value, e.line);
      else if (e.key == "grid")
        cfg.livsic.grid = static_cast<int>(to_int(e.value, e.line));
      else
        fail(e.line, "unknown key '" + e.key + "' in [livsic]");
    } else if (sec == "correlate") {
      cfg.correlate.present = true;
      if (e.key == "phi")
        cfg.correlate.phi = parse_obs(e.value, e.line, d, l);
      else if (e.key == "psi")
        cfg.correlate.psi = parse_obs(e.value, e.line, d, l);
      else if (e.key == "gx")
        cfg.correlate.gx = to_int(e.value, e.line);
      else if (e.key == "gy")
        cfg.correlate.gy = static_cast<int>(to_int(e.value, e.line));
      else if (e.key == "n_max")
        cfg.correlate.n_max = static_cast<int>(to_int(e.value, e.line));
      else if (e.key == "fit_lo")
        cfg.correlate.fit_lo = static_cast<int>(to_int(e.value, e.line));
      else if (e.key == "fit_hi")
        cfg.correlate.fit_hi = static_cast<int>(to_int(e.value, e.line));
      else if (e.key == "noise_floor")
        cfg.correlate.noise_floor = to_double(e.value, e.line);
      else
        fail(e.line, "unknown key '" + e.key + "' in [correlate]");
    } else if (sec.empty()) {
      if (e.key == "seed") {
        long long v = to_int(e.value, e.line);
        if (v < 0) fail(e.line, "seed must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(v);
      } else {
        fail(e.line, "unknown top-level key '" + e.key + "'");
      }
    }
  }

  if (cfg.spectral.present) {
    if (cfg.spectral.K < 1) throw ConfigError("config: spectral K must be >= 1");
    if (cfg.spectral.nu_max < 1)
      throw ConfigError("config: nu_max must be >= 1");
    if (cfg.spectral.n_norms < 2)
      throw ConfigError("config: n_norms must be >= 2");
  }
  if (cfg.symbol.present) {
    if (cfg.symbol.n_max < 1) throw ConfigError("config: symbol n_max >= 1");
    if (cfg.symbol.nx < 2 || cfg.symbol.nxi < 3)
      throw ConfigError("config: symbol grid too small");
    if (!(cfg.symbol.margin > 0))
      throw ConfigError("config: symbol margin must be positive");
  }
  if (cfg.livsic.present) {
    if (cfg.livsic.p_max < 1 + l)
      throw ConfigError("config: livsic p_max too small for fiber dimension");
    if (cfg.livsic.v_max < 1) throw ConfigError("config: livsic v_max >= 1");
  }
  if (cfg.correlate.present) {
    if (cfg.correlate.gx < 16 || cfg.correlate.gy < 2)
      throw ConfigError("config: correlate grid too small");
    if (cfg.correlate.n_max < 1)
      throw ConfigError("config: correlate n_max >= 1");
    if (cfg.correlate.fit_lo < 0 || cfg.correlate.fit_hi <= cfg.correlate.fit_lo)
      throw ConfigError("config: correlate fit window is empty");
    if (cfg.correlate.fit_hi > cfg.correlate.n_max)
      throw ConfigError("config: correlate fit window exceeds n_max");
  }
  return cfg;
}

LabConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const LabConfig& cfg) {
  std::ostringstream o;
  o << "seed = " << cfg.seed << "\n";
  o << "\n[map]\n";
  o << "kind = " << cfg.map.kind << "\n";
  if (cfg.map.kind == "linear") {
    o << "matrix =";
    for (std::size_t r = 0; r < cfg.map.matrix.size(); ++r) {
      if (r) o << " ;";
      for (int v : cfg.map.matrix[r]) o << " " << v;
    }
    o << "\n";
  }
  if (cfg.map.kind == "perturbed") {
    o << "N0 = " << cfg.map.N0 << "\n";
    for (auto& t : cfg.map.pterms)
      o << "pterm = " << static_cast<long long>(t[0]) << " " << fmt(t[1])
        << " " << fmt(t[2]) << "\n";
  }
  o << "\n[tau]\n";
  o << "fiber_dim = " << cfg.tau.fiber_dim << "\n";
  for (auto& [comp, v] : cfg.tau.consts)
    o << "const = " << comp << " " << fmt(v) << "\n";
  for (auto& t : cfg.tau.terms) {
    o << "term = " << t.comp;
    for (int ki : t.k) o << " " << ki;
    o << " " << fmt(t.a) << " " << fmt(t.b) << "\n";
  }
  if (cfg.spectral.present) {
    o << "\n[spectral]\n";
    o << "K = " << cfg.spectral.K << "\n";
    o << "s = " << fmt(cfg.spectral.s) << "\n";
    o << "weight_style = " << cfg.spectral.weight_style << "\n";
    o << "nu_max = " << cfg.spectral.nu_max << "\n";
    o << "n_norms = " << cfg.spectral.n_norms << "\n";
  }
  if (cfg.symbol.present) {
    o << "\n[symbol]\n";
    o << "s = " << fmt(cfg.symbol.s) << "\n";
    o << "n_max = " << cfg.symbol.n_max << "\n";
    o << "margin = " << fmt(cfg.symbol.margin) << "\n";
    o << "nx = " << cfg.symbol.nx << "\n";
    o << "nxi = " << cfg.symbol.nxi << "\n";
    o << "dir_degrees = " << fmt(cfg.symbol.dir_degrees) << "\n";
  }
  if (cfg.livsic.present) {
    o << "\n[livsic]\n";
    o << "p_max = " << cfg.livsic.p_max << "\n";
    o << "mode = " << cfg.livsic.mode << "\n";
    o << "v_max = " << cfg.livsic.v_max << "\n";
    o << "orbit_tol_scale = " << fmt(cfg.livsic.orbit_tol_scale) << "\n";
    o << "equation_tol = " << fmt(cfg.livsic.equation_tol) << "\n";
    o << "grid = " << cfg.livsic.grid << "\n";
  }
  if (cfg.correlate.present) {
    o << "\n[correlate]\n";
    auto put_obs = [&](const char* name, const std::vector<ObsTermSpec>& ts) {
      if (ts.empty()) return;
      o << name << " =";
      for (std::size_t i = 0; i < ts.size(); ++i) {
        if (i) o << " ;";
        for (int v : ts[i].k) o << " " << v;
        for (int v : ts[i].nu) o << " " << v;
        o << " " << fmt(ts[i].re) << " " << fmt(ts[i].im);
      }
      o << "\n";
    };
    put_obs("phi", cfg.correlate.phi);
    put_obs("psi", cfg.correlate.psi);
    o << "gx = " << cfg.correlate.gx << "\n";
    o << "gy = " << cfg.correlate.gy << "\n";
    o << "n_max = " << cfg.correlate.n_max << "\n";
    o << "fit_lo = " << cfg.correlate.fit_lo << "\n";
    o << "fit_hi = " << cfg.correlate.fit_hi << "\n";
    o << "noise_floor = " << fmt(cfg.correlate.noise_floor) << "\n";
  }
  return o.str();
}

ExpandingMap build_map(const LabConfig& cfg) {
  const MapSpec& m = cfg.map;
  if (m.kind == "doubling" || m.kind == "tripling") {
    Eigen::MatrixXi A(1, 1);
    A(0, 0) = (m.kind == "doubling") ? 2 : 3;
    return ExpandingMap::linear_toral(A);
  }
  if (m.kind == "linear") {
    int n = static_cast<int>(m.matrix.size());
    Eigen::MatrixXi A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = m.matrix[i][j];
    return ExpandingMap::linear_toral(A);
  }
  if (m.kind == "perturbed") {
    TrigPoly p(1);
    for (auto& t : m.pterms) {
      VecI k(1);
      k << static_cast<int>(t[0]);
      p.add_term(k, t[1], t[2]);
    }
    return ExpandingMap::perturbed_doubling(m.N0, p);
  }
  throw ConfigError("config: unknown map kind '" + m.kind + "'");
}

FiberRotation build_tau(const LabConfig& cfg) {
  int d = 1;
  if (cfg.map.kind == "linear") d = static_cast<int>(cfg.map.matrix.size());
  int l = cfg.tau.fiber_dim;
  std::vector<TrigPoly> comps;
  comps.reserve(l);
  for (int c = 0; c < l; ++c) comps.emplace_back(d);
  for (auto& [comp, v] : cfg.tau.consts) comps[comp - 1] += TrigPoly(d, v);
  for (auto& t : cfg.tau.terms) {
    VecI k(d);
    for (int i = 0; i < d; ++i) k[i] = t.k[i];
    comps[t.comp - 1].add_term(k, t.a, t.b);
  }
  return FiberRotation(d, comps);
}

} // namespace skewmix
