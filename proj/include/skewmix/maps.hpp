#pragma once

#include <cstdint>
#include <vector>

#include "skewmix/trigpoly.hpp"

//---------------------------------------------------------------------------
// maps: expanding endomorphisms of the torus and fiber translations
//
// Two families are supported:
//   * LinearToral        T x = A x mod 1 for an integer matrix A whose
//                        smallest singular value exceeds 1
//   * PerturbedDoubling  T x = N0 x + p(x) mod 1 on the circle, p a trig
//                        polynomial with |p'|_inf < (N0-1)/2
//
// The skew product acts on T^d x T^l by (x,y) -> (T x, y + tau(x)), where
// tau is a vector of trig polynomials (a FiberRotation).
//---------------------------------------------------------------------------

namespace skewmix {

struct PreimageTree {
  int depth = 0;
  int degree = 0;
  // level[k] holds the degree^k preimages under T^k; the children of
  // level[k][i] sit at level[k+1][i*degree + w], w the branch index,
  // so the ancestor chain of a leaf lists y, T y, ..., T^depth y = x
  std::vector<std::vector<Vec>> level;

  std::size_t nodes() const {
    std::size_t n = 0;
    for (const auto& l : level) n += l.size();
    return n;
  }
};

struct PeriodicOrbit {
  int period = 0;
  std::vector<Vec> points; // points[i+1] = T(points[i]), cyclically
};

class ExpandingMap {
public:
  enum class Kind { LinearToral, PerturbedDoubling };

  // integer matrix, all eigenvalues outside the closed unit disc and
  // smallest singular value > 1; throws ConfigError otherwise
  static ExpandingMap linear_toral(const Eigen::MatrixXi& A);

  // circle map N0 x + p(x); requires |p'|_inf < (N0-1)/2 so branches
  // stay uniformly separated and gamma = N0 - |p'|_inf > 1
  static ExpandingMap perturbed_doubling(int N0, const TrigPoly& p);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  int degree() const { return degree_; }      // number of inverse branches
  double gamma() const { return gamma_; }     // certified expansion constant
  double dT_sup() const { return dT_sup_; }   // sup |D T|_2

  Vec eval(const Vec& x) const;               // T x in [0,1)^d
  Mat jacobian(const Vec& x) const;           // D_x T
  double jac_det(const Vec& x) const;         // |det D_x T|

  // the w-th preimage of x, w in [0, degree); continuous selection per
  // branch; PerturbedDoubling solves the lifted equation by damped Newton
  Vec inverse_branch(const Vec& x, int w) const;
  std::vector<Vec> preimages(const Vec& x) const;

  // full backward tree of the given depth; total node count is capped
  PreimageTree preimage_tree(const Vec& x, int depth,
                             std::uint64_t budget = (1u << 20)) const;

  // all orbits of minimal period <= p_max, deduplicated through canonical
  // word rotations and a torus-distance guard, sorted deterministically
  std::vector<PeriodicOrbit> periodic_orbits(int p_max) const;

private:
  ExpandingMap() = default;
  void audit_expansion() const;
  double newton_root(double target) const; // lift root, not wrapped

  Kind kind_ = Kind::LinearToral;
  int dim_ = 1;
  int degree_ = 2;
  double gamma_ = 2.0;
  double dT_sup_ = 2.0;

  // linear data
  Eigen::MatrixXi Ai_;
  Mat A_, Ainv_;
  double detA_ = 2.0;
  std::vector<VecI> reps_; // coset representatives of Z^d / A Z^d

  // perturbed data
  int N0_ = 2;
  TrigPoly p_;
  double dp_sup_ = 0.0;
};

class FiberRotation {
public:
  FiberRotation(int base_dim, std::vector<TrigPoly> components);

  int base_dim() const { return base_dim_; }
  int fiber_dim() const { return int(comp_.size()); }
  const TrigPoly& component(int i) const { return comp_[i]; }

  Vec eval(const Vec& x) const;    // tau(x) in R^l
  Mat jacobian(const Vec& x) const; // l x d matrix D tau

  // certified sup_x |D tau|_2: min of the l^1 coefficient bound and a
  // Lipschitz-inflated grid maximum
  double dtau_sup() const { return dtau_sup_; }

private:
  int base_dim_ = 1;
  std::vector<TrigPoly> comp_;
  double dtau_sup_ = 0.0;
};

} // namespace skewmix
