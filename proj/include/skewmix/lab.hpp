#pragma once

#include <complex>
#include <string>
#include <vector>

#include "json.hpp"
#include "skewmix/cobound.hpp"
#include "skewmix/config.hpp"
#include "skewmix/density.hpp"
#include "skewmix/maps.hpp"

//---------------------------------------------------------------------------
// lab: correlation curves and the dichotomy driver
//
// Observables are finite character sums phi(x, y) = sum_a c_a
// e^{2 pi i (k_a.x + nu_a.y)}. Against the product measure h(x)dx x dy the
// fiber integral of phi(F^n(x,y)) conj(psi(x,y)) collapses to the pairs
// with matching fiber frequency, so the correlation at lag n reduces to
// base-grid sums of e^{2 pi i (k_a.T^n x + nu_a.S_n(x) - k_b.x)} weighted
// by h. The uniform fiber grid reproduces that collapse exactly as long as
// 2 max|nu| < gy.
//---------------------------------------------------------------------------

namespace skewmix {

using cplx = std::complex<double>;

struct Observable {
  struct Term {
    VecI k;  // base frequency, d entries
    VecI nu; // fiber frequency, l entries
    cplx c;
  };
  int d = 1, l = 1;
  std::vector<Term> terms;
};

Observable make_observable(const std::vector<ObsTermSpec>& specs, int d,
                           int l);

struct CorrelationSeries {
  std::vector<cplx> C;       // C[n], n = 0..n_max
  std::vector<double> abs_C;
  cplx mean_phi, mean_psi;
  long gx = 0;
  int gy = 0;
};

CorrelationSeries correlation_series(const ExpandingMap& map,
                                     const FiberRotation& tau,
                                     const DensityModel& h,
                                     const Observable& phi,
                                     const Observable& psi, int n_max,
                                     long gx, int gy);

struct DecayFit {
  double rate = 0.0;    // fitted e^{slope} of log|C_n|
  double r2 = 0.0;
  double log_amp = 0.0; // intercept
  int n_used = 0;
  int lo = 0, hi = 0;
};

// log-linear least squares on n in [lo, hi], dropping entries at or below
// the noise floor; throws WindowTooNoisy with fewer than 5 usable points
DecayFit fit_decay_rate(const std::vector<double>& abs_C, int lo, int hi,
                        double noise_floor = 1e-13);

// canonical probe set: 1..nu_max for l = 1; the lex-sorted half lattice
// 0 < |nu|_inf <= nu_max with positive leading entry for l = 2 (the
// conjugate frequency has the mirrored spectrum)
std::vector<VecI> canonical_nu_set(int l, int nu_max);

// runs the full pipeline on one configuration and returns the report:
// coboundary search, twisted spectra over the probe frequencies, symbol
// contraction exponent, correlation fit, and the verdict
nlohmann::json dichotomy_report(const LabConfig& cfg);

} // namespace skewmix
