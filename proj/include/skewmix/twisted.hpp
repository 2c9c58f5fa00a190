#pragma once

#include <complex>
#include <vector>

#include "skewmix/density.hpp"
#include "skewmix/maps.hpp"
#include "skewmix/weight_g.hpp"

//---------------------------------------------------------------------------
// twisted: Galerkin matrices of the twisted composition operators
//
// For a fiber frequency nu in Z^l the twisted Koopman and transfer
// operators on the base are
//
//   (K_nu phi)(x) = e^{2 pi i nu.tau(x)} phi(T x)
//   (L_nu psi)(x) = sum_{T y = x} e^{2 pi i nu.tau(y)} psi(y) / |Jac T(y)|
//
// assembled in the character basis e^{2 pi i xi.x}, |xi|_inf <= K, lex
// ordering. L_nu is the adjoint of K_{-nu}, and L_0 fixes the invariant
// density. Spectral radii of the truncations stabilize fast in K; the
// certified radius comes from eigenvalues with a nested-truncation
// disagreement bound, with a Gelfand-limit slope as a cross-check.
//---------------------------------------------------------------------------

namespace skewmix {

inline int lat_size(int d, int K) {
  int n = 2 * K + 1;
  return d == 1 ? n : n * n;
}

inline VecI lat_decode(int d, int K, int idx) {
  VecI k(d);
  if (d == 1) {
    k[0] = idx - K;
  } else {
    int n = 2 * K + 1;
    k[0] = idx / n - K;
    k[1] = idx % n - K;
  }
  return k;
}

inline int lat_encode(int d, int K, const VecI& k) {
  if (d == 1) return k[0] + K;
  return (k[0] + K) * (2 * K + 1) + (k[1] + K);
}

struct SobolevWeight {
  enum class Style { StandardBracket, SymbolLambda };
  Style style = Style::StandardBracket;
  double s = -1.0;
  VecI nu;
  const WeightG* g = nullptr; // required for SymbolLambda

  double operator()(const VecI& xi) const;
};

struct TwistedMatrix {
  Eigen::MatrixXcd M;
  int d = 1;
  int K = 0;
  VecI nu;
  bool aliasing_warning = false;
  double alias_mass = 0.0; // relative multiplier mass outside |k|_inf <= K
};

TwistedMatrix assemble_koopman(const ExpandingMap& map,
                               const FiberRotation& tau, const VecI& nu,
                               int K);

TwistedMatrix assemble_transfer(const ExpandingMap& map,
                                const FiberRotation& tau, const VecI& nu,
                                int K);

// 2-norms of W M^n W^{-1}, n = 1..n_max, W the diagonal Sobolev weight
std::vector<double> weighted_norm_growth(const TwistedMatrix& tm,
                                         const SobolevWeight& w, int n_max);

struct SpectralRadiusResult {
  double radius = 0.0;             // eigenvalue radius at lattice radius K
  std::complex<double> lead;       // the extremal eigenvalue
  double uncertainty = 0.0;        // nested-truncation disagreement
  double gelfand = 0.0;            // norm-slope estimate over the tail
  std::vector<double> norms;       // weighted norm growth, n = 1..n_norms
  bool aliasing_warning = false;
  int K = 0;
};

// transfer-operator radius with a K/2 sub-block stability gate (throws
// NotConverged past 1e-6 disagreement) and a Gelfand diagnostic fitted on
// the last third of the n in [20,40] norm tail
SpectralRadiusResult spectral_radius(const ExpandingMap& map,
                                     const FiberRotation& tau, const VecI& nu,
                                     int K, double s = -1.0,
                                     SobolevWeight::Style style =
                                         SobolevWeight::Style::StandardBracket,
                                     const WeightG* g = nullptr,
                                     int n_norms = 30);

// sup-norm residual between matrix application and direct operator
// evaluation, probed with seeded random trig polynomials of degree <= K/2
double koopman_residual(const ExpandingMap& map, const FiberRotation& tau,
                        const VecI& nu, const TwistedMatrix& tm,
                        unsigned seed = 7);
double transfer_residual(const ExpandingMap& map, const FiberRotation& tau,
                         const VecI& nu, const TwistedMatrix& tm,
                         unsigned seed = 7);

} // namespace skewmix
