#pragma once

#include <optional>
#include <vector>

#include "skewmix/maps.hpp"

//---------------------------------------------------------------------------
// cobound: periodic-orbit obstructions and coboundary certificates
//
// tau is essentially cohomologous to a constant along v when
//
//   v . tau = c + u - u o T
//
// for some c in R and smooth u. Every periodic orbit o = {x, ..., T^{p-1}x}
// then forces v . sum_o tau = p c, so orbit sums are linear obstructions:
// a dependence direction v is recovered from them alone. The transfer
// function is reconstructed from the backward-orbit derivative series
//
//   V(x) = sum_{j>=1} [(D_{z_j} T^j)^t]^{-1} (D_{z_j} tau)^t v,  z_j = T^{-j} x,
//
// which converges geometrically along any branch chain and telescopes to
// -grad(v . u) when the relation holds; the bounded trapped section of the
// covector cocycle is xi* = -V.
//---------------------------------------------------------------------------

namespace skewmix {

struct Obstruction {
  int period = 0;
  std::vector<Vec> orbit;
  Vec sum; // sum of tau over the orbit, in R^l
};

std::vector<Obstruction> collect_obstructions(const ExpandingMap& map,
                                              const FiberRotation& tau,
                                              int p_max);

struct RealDependence {
  Vec v;                    // unit vector, canonical sign
  double c = 0.0;           // least-squares constant
  double rms_residual = 0.0;
};

// best real direction: smallest eigenvector of the c-eliminated Gram
// matrix of the obstruction rows; needs at least l+2 obstructions
RealDependence detect_real(const std::vector<Obstruction>& obs, int l);

struct IntegralDependence {
  VecI v; // gcd-reduced, canonical sign
  double c = 0.0;
  double residual = 0.0; // l2 orbit misfit, normalized by |v|_2
};

// exhaustive search over 0 < |v|_inf <= v_max; accepts when the
// normalized misfit is below tol_scale * sum of periods
std::optional<IntegralDependence> detect_integral(
    const std::vector<Obstruction>& obs, int l, int v_max = 12,
    double tol_scale = 1e-6);

struct VFieldSamples {
  int grid = 0;             // samples at x = i/grid per axis (row-major d=2)
  int dim = 1;
  Vec v;                    // fiber direction the series was built along
  std::vector<Vec> values;  // V(x) in R^d
  double tail_bound = 0.0;  // certified remainder of the truncated series
};

VFieldSamples vfield(const ExpandingMap& map, const FiberRotation& tau,
                     const Vec& v, int grid = 4096);

struct ExactnessReport {
  double loop_max = 0.0; // largest torus loop integral (trapezoid rule)
  bool exact = false;    // below the gradient tolerance
};

ExactnessReport check_exactness(const VFieldSamples& f, double tol = 1e-10);

// spectral antiderivative: grad u = V, u(0) = 0; throws NotExact when the
// loop integrals say V is no gradient
TrigPoly reconstruct_u(const VFieldSamples& f, double loop_tol = 1e-10,
                       int K_keep = 64);

struct CoboundaryCertificate {
  Vec v;                         // direction actually certified
  std::optional<VecI> v_integral;
  double c = 0.0;                // fitted from orbit sums
  double c_mod1 = 0.0;
  TrigPoly u;                    // transfer function, u(0) = 0
  double equation_residual = 0.0; // sup |v.tau - c - u + u o T| on the grid
  double orbit_rms = 0.0;
  bool valid = false;            // equation_residual <= tolerance
};

struct LivsicOptions {
  int p_max = 5;
  enum class Mode { Real, Integral, Both } mode = Mode::Both;
  int v_max = 12;
  double orbit_tol_scale = 1e-6;
  double equation_tol = 1e-5;
  double real_reject = 0.01; // rms above this means no real dependence
  int grid = 4096;
  int K_u = 64;
};

// the full pipeline: obstructions -> dependence direction -> V series ->
// u -> certified functional equation; nullopt when no direction survives
std::optional<CoboundaryCertificate> livsic(const ExpandingMap& map,
                                            const FiberRotation& tau,
                                            const LivsicOptions& opt = {});

struct Semiconjugacy {
  double residual = 0.0; // sup torus distance between pi o F and pi + c
  double c = 0.0;
  double c_mod1 = 0.0;
};

// pi(x,y) = v.y + u(x) mod 1 intertwines F with the circle rotation by c;
// needs an integral certificate (throws NotIntegral otherwise)
Semiconjugacy build_semiconjugacy(const ExpandingMap& map,
                                  const FiberRotation& tau,
                                  const CoboundaryCertificate& cert,
                                  int gx = 256, int gy = 16);

} // namespace skewmix
