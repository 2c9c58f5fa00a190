#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "skewmix/maps.hpp"

//---------------------------------------------------------------------------
// config: the experiment description format
//
// Line-oriented sections with `key = value` pairs; '#' starts a comment;
// `term`, `pterm` and `const` keys repeat. Serialization is canonical
// (fixed section and key order, %.17g floats), so serialize(parse(.)) is a
// fixed point on the serialized form.
//---------------------------------------------------------------------------

namespace skewmix {

struct MapSpec {
  std::string kind = "doubling"; // doubling | tripling | linear | perturbed
  std::vector<std::vector<int>> matrix; // linear: rows of A
  int N0 = 2;                           // perturbed
  std::vector<std::array<double, 3>> pterms; // perturbed: (k, a, b)
};

struct TauTermSpec {
  int comp = 1; // 1-based component index
  std::vector<int> k;
  double a = 0.0, b = 0.0;
};

struct TauSpec {
  int fiber_dim = 1;
  std::vector<std::pair<int, double>> consts; // (comp, value)
  std::vector<TauTermSpec> terms;
};

struct SpectralSpec {
  bool present = false;
  int K = 64;
  double s = -1.0;
  std::string weight_style = "standard"; // standard | symbol
  int nu_max = 3;
  int n_norms = 30;
};

struct SymbolSpec {
  bool present = false;
  double s = -1.0;
  int n_max = 8;
  double margin = 1e-3;
  int nx = 128;
  int nxi = 129;
  double dir_degrees = 5.0;
};

struct LivsicSpec {
  bool present = false;
  int p_max = 5;
  std::string mode = "both"; // real | integral | both
  int v_max = 12;
  double orbit_tol_scale = 1e-6;
  double equation_tol = 1e-5;
  int grid = 4096;
};

struct ObsTermSpec {
  std::vector<int> k;  // d entries
  std::vector<int> nu; // l entries
  double re = 0.0, im = 0.0;
};

struct CorrelateSpec {
  bool present = false;
  std::vector<ObsTermSpec> phi, psi;
  long gx = 1299709; // prime grids dodge lattice aliasing under T
  int gy = 8;
  int n_max = 24;
  int fit_lo = 6;
  int fit_hi = 16;
  double noise_floor = 1e-13;
};

struct LabConfig {
  std::uint64_t seed = 0;
  MapSpec map;
  TauSpec tau;
  SpectralSpec spectral;
  SymbolSpec symbol;
  LivsicSpec livsic;
  CorrelateSpec correlate;
};

LabConfig parse_config(const std::string& text);
LabConfig load_config_file(const std::string& path);
std::string serialize_config(const LabConfig& cfg);

ExpandingMap build_map(const LabConfig& cfg);
FiberRotation build_tau(const LabConfig& cfg);

} // namespace skewmix
