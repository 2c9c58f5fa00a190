#pragma once

#include <complex>
#include <vector>

#include "skewmix/maps.hpp"

//---------------------------------------------------------------------------
// density: invariant density of the base map and the tower weights
//
// The transfer operator L f(x) = sum_{T y = x} f(y)/|Jac T(y)| fixes the
// smooth invariant density h with integral 1. The normalized weights
//
//   A_n(y) = h(y) / (|Jac T^n(y)| h(T^n y)),   sum_{T^n y = x} A_n(y) = 1
//
// turn depth-n preimage sets into probability measures.
//---------------------------------------------------------------------------

namespace skewmix {

struct DensityModel {
  int dim = 1;
  int K = 0; // coefficient lattice radius; lex storage over |k|_inf <= K
  std::vector<std::complex<double>> coef; // coef at k=0 normalized to 1
  double residual = 0.0;  // sup |L h - h| on the audit grid
  double min_value = 1.0; // grid minimum, positivity margin

  double eval(const Vec& x) const;
  std::complex<double> coef_at(const VecI& k) const;
};

// one application of L to grid samples (row-major for d=2); the grid per
// axis must be a power of two and at least 4x the branch count
std::vector<double> transfer_apply(const ExpandingMap& map,
                                   const std::vector<double>& f, int grid);

// power iteration of L from f = 1 on the given grid, spectrally truncated,
// audited against invariance and positivity
DensityModel invariant_density(const ExpandingMap& map, int grid = 4096,
                               int K_keep = 64, double tol = 1e-13,
                               int max_iter = 10000);

double weight_A(const ExpandingMap& map, const DensityModel& h, const Vec& y,
                int n);

} // namespace skewmix
