#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

//---------------------------------------------------------------------------
// trigpoly: real trigonometric polynomials on the d-torus, d in {1,2}
//
// f(x) = c0 + sum_k [ a_k cos(2 pi k.x) + b_k sin(2 pi k.x) ]
//
// Frequencies are canonicalized so the first nonzero entry of k is
// positive; duplicate frequencies merge. These are the building blocks
// for base-map perturbations, fiber translations and transfer functions.
//---------------------------------------------------------------------------

namespace skewmix {

// small fixed-capacity vectors: base dim and fiber dim never exceed 2,
// so everything lives on the stack
using Vec  = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using Mat  = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
using VecI = Eigen::Matrix<int, Eigen::Dynamic, 1, 0, 4, 1>;

constexpr double kTwoPi = 6.283185307179586476925286766559;

// reduce to [0,1); guards against the 1.0 round-up near tiny negatives
inline double wrap01(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r -= 1.0;
  return r;
}

inline double torus_dist(double a, double b) {
  double d = std::fabs(wrap01(a) - wrap01(b));
  return std::min(d, 1.0 - d);
}

inline double torus_dist(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (int i = 0; i < a.size(); ++i) m = std::max(m, torus_dist(a[i], b[i]));
  return m;
}

struct TrigTerm {
  VecI k;
  double a = 0.0; // cosine coefficient
  double b = 0.0; // sine coefficient
};

class TrigPoly {
public:
  TrigPoly() = default;
  explicit TrigPoly(int dim, double c0 = 0.0) : dim_(dim), c0_(c0) {}

  int dim() const { return dim_; }
  double constant() const { return c0_; }
  void set_constant(double c) { c0_ = c; }
  bool zero() const { return c0_ == 0.0 && terms_.empty(); }
  const std::vector<TrigTerm>& terms() const { return terms_; }

  // merges into an existing term when the (canonicalized) frequency repeats
  void add_term(VecI k, double a, double b);

  double eval(const Vec& x) const;
  Vec grad(const Vec& x) const;
  double partial(const Vec& x, int j) const;

  // sum_k 2 pi |k|_2 sqrt(a^2+b^2): upper bound for sup |grad f|_2
  double grad_l1() const;
  // same idea one derivative up: Lipschitz bound for x -> grad f(x)
  double hess_l1() const;
  // largest |k|_inf present
  int max_freq() const;

  TrigPoly& operator+=(const TrigPoly& o);
  TrigPoly& operator*=(double s);

private:
  int dim_ = 1;
  double c0_ = 0.0;
  std::vector<TrigTerm> terms_;
};

} // namespace skewmix
