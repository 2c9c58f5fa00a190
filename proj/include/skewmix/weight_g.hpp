#pragma once

#include "skewmix/maps.hpp"

//---------------------------------------------------------------------------
// weight_g: the radial symbol weight
//
//   g(t) = 1            on [0, R]
//   g(t) = t            on [(gamma+1) R / 2, infinity)
//   cubic Hermite blend in between (value/slope 1,0 at the left knot and
//   t_r, 1 at the right knot)
//
// R = 1.01 * max{1, max{1, 2 |D tau|} / (gamma - 1)} guarantees R > 1, and
// for R > 1 the blend is strictly increasing with 1 <= g(t) <= t on
// [R, t_r]; the constructor still audits both properties on a fine grid.
//---------------------------------------------------------------------------

namespace skewmix {

class WeightG {
public:
  WeightG(double R, double gamma);
  static WeightG build(const ExpandingMap& map, const FiberRotation& tau);

  double R() const { return R_; }
  double gamma() const { return gamma_; }
  double right_knot() const { return t_right_; }
  double dg_sup() const { return dg_sup_; } // certified sup |g'|

  double eval(double t) const;
  double deriv(double t) const;

private:
  double R_, gamma_, t_right_, dg_sup_;
};

} // namespace skewmix
