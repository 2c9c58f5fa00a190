#pragma once

#include <optional>
#include <vector>

#include "skewmix/density.hpp"
#include "skewmix/maps.hpp"
#include "skewmix/weight_g.hpp"

//---------------------------------------------------------------------------
// symbol: the averaged cotangent symbol and its contraction exponent
//
// The one-step covector cocycle over the skew product, evaluated in a
// fiber direction n_dir, is
//
//   F_y(xi) = (D_y T)^t xi + (D_y tau)^t n_dir,
//
// and the depth-n composition based at y takes the closed form
//
//   F^n_y(xi) = (D_y T^n)^t xi + W_n(y) n_dir,
//   W_n(y)    = sum_{k=0}^{n-1} (D_y T^k)^t (D_{T^k y} tau)^t.
//
// Averaging the weight quotient over the depth-n preimages of x gives
//
//   ptilde_n(x, xi) = sum_{T^n y = x} A_n(y) (g(|F^n_y(xi)|)/g(|xi|))^{2s},
//
// which is <= 1 everywhere (s < 0), drops below 1 exactly when some
// preimage pushes the covector past radius R, and is bounded by
// ((gamma+1)/2)^{2s} outside |xi| <= R.
//---------------------------------------------------------------------------

namespace skewmix {

Vec cocycle_step(const ExpandingMap& map, const FiberRotation& tau,
                 const Vec& n_dir, const Vec& x, const Vec& xi);

// W_n at the base point x (d x l matrix; W_0 = 0, W_1 = (D_x tau)^t)
Mat w_n(const ExpandingMap& map, const FiberRotation& tau, const Vec& x,
        int n);

double ptilde(const ExpandingMap& map, const FiberRotation& tau,
              const DensityModel& h, const WeightG& g, double s,
              const Vec& n_dir, int n, const Vec& x, const Vec& xi);

// independent cross-check: recursive branch descent, reversed branch
// order, cocycle data recombined from per-path factor lists
double ptilde_recursive(const ExpandingMap& map, const FiberRotation& tau,
                        const DensityModel& h, const WeightG& g, double s,
                        const Vec& n_dir, int n, const Vec& x, const Vec& xi);

struct PTildeField {
  int n = 0;
  Vec n_dir;
  std::vector<double> x_grid;  // nx points per base axis
  std::vector<double> xi_grid; // nxi points per covector axis
  Eigen::MatrixXd values;      // nx^d rows, nxi^d columns
  double grid_max = 0.0;
  double exterior_bound = 0.0; // ((gamma+1)/2)^{2s}
  double sup = 0.0;            // max(grid_max, exterior_bound)
  // fraction of grid nodes whose every preimage keeps the covector <= R
  double escape_fraction = 0.0;
  // largest adjacent-cell jump, a resolution diagnostic for the grid sup
  double lipschitz_inflation = 0.0;
};

PTildeField ptilde_field(const ExpandingMap& map, const FiberRotation& tau,
                         const DensityModel& h, const WeightG& g, double s,
                         const Vec& n_dir, int n, int nx = 128, int nxi = 129,
                         double R_grid = 0.0 /* 0 -> use g.R() */);

struct DirectionHistory {
  Vec dir;
  std::vector<double> sup_history; // sup ptilde_n for n = 1..n_last
};

struct N0Result {
  std::optional<int> n0; // least n with sup over directions <= 1 - margin
  double ptilde0 = 1.0;  // the certified sup at n0
  std::vector<DirectionHistory> per_direction;
  double R = 0.0;
  double margin = 0.0;
};

// directions: {+1,-1} for l = 1; a uniform circle sweep (dir_degrees
// resolution) for l = 2, halved by the antipodal symmetry
// field(-n_dir)(xi) = field(n_dir)(-xi)
N0Result find_n0(const ExpandingMap& map, const FiberRotation& tau,
                 const DensityModel& h, const WeightG& g, double s,
                 int n_max = 8, double margin = 1e-3, int nx = 128,
                 int nxi = 129, double dir_degrees = 5.0);

} // namespace skewmix
