#include "skewmix/weight_g.hpp"

#include <algorithm>
#include <cmath>

#include "skewmix/errors.hpp"

namespace skewmix {

WeightG::WeightG(double R, double gamma) : R_(R), gamma_(gamma) {
  if (R <= 1.0 || gamma <= 1.0)
    throw ConfigError("weight g needs R > 1 and gamma > 1");
  t_right_ = 0.5 * (gamma + 1.0) * R;

  // audit monotonicity, the 1 <= g <= t envelope on the blend, and C^1
  // matching at the knots
  const int G = 100000;
  const double dt = (t_right_ - R_) / G;
  double prev = eval(R_), dprev = deriv(R_);
  double dmax = 1.0, curv = 0.0;
  for (int i = 1; i <= G; ++i) {
    double t = R_ + i * dt;
    double v = eval(t), dv = deriv(t);
    if (v < prev - 1e-12)
      throw NumericError("weight g lost monotonicity on the blend");
    if (v < 1.0 - 1e-12 || v > t + 1e-12)
      throw NumericError("weight g escaped its 1 <= g <= t envelope");
    dmax = std::max(dmax, dv);
    curv = std::max(curv, std::abs(dv - dprev) / dt);
    prev = v;
    dprev = dv;
  }
  for (double knot : {R_, t_right_}) {
    const double e = 1e-7 * std::max(1.0, knot);
    double jump = std::abs((eval(knot + e) - eval(knot - e)) / (2.0 * e) -
                           deriv(knot));
    if (jump > 1e-5)
      throw NumericError("weight g is not C^1 at a knot");
  }
  dg_sup_ = dmax + curv * dt; // inflate by the observed curvature
}

WeightG WeightG::build(const ExpandingMap& map, const FiberRotation& tau) {
  double R = 1.01 * std::max(1.0, std::max(1.0, 2.0 * tau.dtau_sup()) /
                                      (map.gamma() - 1.0));
  return WeightG(R, map.gamma());
}

double WeightG::eval(double t) const {
  if (t <= R_) return 1.0;
  if (t >= t_right_) return t;
  const double d = t_right_ - R_;
  const double u = (t - R_) / d;
  const double u2 = u * u, u3 = u2 * u;
  // Hermite basis: values (1, t_r), slopes (0, 1)
  return (2 * u3 - 3 * u2 + 1) * 1.0 + (-2 * u3 + 3 * u2) * t_right_ +
         (u3 - u2) * d;
}

double WeightG::deriv(double t) const {
  if (t < R_) return 0.0;
  if (t > t_right_) return 1.0;
  const double d = t_right_ - R_;
  const double u = (t - R_) / d;
  const double u2 = u * u;
  return ((6 * u2 - 6 * u) * 1.0 + (-6 * u2 + 6 * u) * t_right_) / d +
         (3 * u2 - 2 * u);
}

} // namespace skewmix
