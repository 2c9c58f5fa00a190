#include "skewmix/maps.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "skewmix/errors.hpp"

namespace skewmix {

namespace {

// column-operation Hermite form of a 2x2 integer matrix: returns lower
// triangular H with A Z^2 = H Z^2, diagonal positive
Eigen::Matrix2i hermite_2x2(Eigen::Matrix2i A) {
  // kill A(0,1) by the Euclidean algorithm on row 0
  while (A(0, 1) != 0) {
    if (A(0, 0) == 0) {
      A.col(0).swap(A.col(1));
      continue;
    }
    int q = A(0, 1) / A(0, 0);
    A.col(1) -= q * A.col(0);
    if (A(0, 1) != 0) A.col(0).swap(A.col(1));
  }
  if (A(0, 0) < 0) A.col(0) = -A.col(0);
  if (A(1, 1) < 0) A.col(1) = -A.col(1);
  return A;
}

} // namespace

//---------------------------------------------------------------------------
// constructors and admissibility audits
//---------------------------------------------------------------------------

ExpandingMap ExpandingMap::linear_toral(const Eigen::MatrixXi& A) {
  if (A.rows() != A.cols() || A.rows() < 1 || A.rows() > 2)
    throw ConfigError("linear toral matrix must be 1x1 or 2x2");

  ExpandingMap m;
  m.kind_ = Kind::LinearToral;
  m.dim_ = int(A.rows());
  m.Ai_ = A;
  m.A_ = A.cast<double>();

  double det = m.A_.determinant();
  if (std::abs(det) < 1.5)
    throw ConfigError("linear toral matrix must have |det| >= 2");
  m.detA_ = std::abs(det);
  m.degree_ = int(std::lround(m.detA_));
  m.Ainv_ = m.A_.inverse();

  // every eigenvalue strictly outside the unit circle
  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(m.A_), false);
  for (int i = 0; i < m.dim_; ++i)
    if (std::abs(es.eigenvalues()[i]) <= 1.0 + 1e-12)
      throw ConfigError("linear toral matrix has an eigenvalue on or inside the unit circle");

  // expansion constant is the smallest singular value; it must beat 1
  Eigen::JacobiSVD<Eigen::MatrixXd> svd((Eigen::MatrixXd(m.A_)));
  m.gamma_ = svd.singularValues().minCoeff();
  m.dT_sup_ = svd.singularValues().maxCoeff();
  if (m.gamma_ <= 1.0)
    throw ConfigError("linear toral matrix is not uniformly expanding (sigma_min <= 1)");

  // coset representatives of Z^d / A Z^d
  if (m.dim_ == 1) {
    for (int w = 0; w < m.degree_; ++w) {
      VecI r(1);
      r[0] = w;
      m.reps_.push_back(r);
    }
  } else {
    Eigen::Matrix2i H = hermite_2x2(Eigen::Matrix2i(A));
    for (int i = 0; i < H(0, 0); ++i)
      for (int j = 0; j < H(1, 1); ++j) {
        VecI r(2);
        r << i, j;
        m.reps_.push_back(r);
      }
    if (int(m.reps_.size()) != m.degree_)
      throw ConfigError("coset enumeration does not match |det A|");
  }

  m.audit_expansion();
  return m;
}

ExpandingMap ExpandingMap::perturbed_doubling(int N0, const TrigPoly& p) {
  if (N0 < 2) throw ConfigError("perturbed doubling needs N0 >= 2");
  if (p.dim() != 1) throw ConfigError("perturbation must live on the circle");

  ExpandingMap m;
  m.kind_ = Kind::PerturbedDoubling;
  m.dim_ = 1;
  m.N0_ = N0;
  m.degree_ = N0;
  m.p_ = p;

  // certified |p'|_inf: l^1 bound vs Lipschitz-inflated grid max
  const int G = 4096;
  double grid_max = 0.0;
  Vec x(1);
  for (int i = 0; i < G; ++i) {
    x[0] = double(i) / G;
    grid_max = std::max(grid_max, std::abs(p.grad(x)[0]));
  }
  m.dp_sup_ = std::min(p.grad_l1(), grid_max + p.hess_l1() * 0.5 / G);

  if (m.dp_sup_ >= 0.5 * (N0 - 1))
    throw ConfigError("perturbation too strong: |p'|_inf must stay below (N0-1)/2");
  m.gamma_ = N0 - m.dp_sup_;
  m.dT_sup_ = N0 + m.dp_sup_;
  m.audit_expansion();
  return m;
}

void ExpandingMap::audit_expansion() const {
  // grid audit of the smallest singular value of D T; the linear case has
  // a constant Jacobian so one sample settles it
  const int G = (kind_ == Kind::LinearToral) ? 1 : 4096;
  for (int i = 0; i < G; ++i) {
    Vec x = Vec::Zero(dim_);
    x[0] = double(i) / G;
    Mat J = jacobian(x);
    double smin;
    if (dim_ == 1) {
      smin = std::abs(J(0, 0));
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd((Eigen::MatrixXd(J)));
      smin = svd.singularValues().minCoeff();
    }
    if (smin < gamma_ - 1e-9)
      throw ConfigError("expansion audit failed: |D T| dips below gamma on the grid");
  }

  // branch separation: preimages of a test point stay apart
  Vec x0 = Vec::Zero(dim_);
  auto pre = preimages(x0);
  double min_sep = 1.0;
  for (std::size_t i = 0; i < pre.size(); ++i)
    for (std::size_t j = i + 1; j < pre.size(); ++j)
      min_sep = std::min(min_sep, torus_dist(pre[i], pre[j]));
  if (min_sep < 0.5 / degree_)
    throw ConfigError("inverse branches are not separated by 1/(2 deg)");
}

//---------------------------------------------------------------------------
// evaluation
//---------------------------------------------------------------------------

Vec ExpandingMap::eval(const Vec& x) const {
  Vec y(dim_);
  if (kind_ == Kind::LinearToral) {
    y = A_ * x;
  } else {
    y[0] = N0_ * x[0] + p_.eval(x);
  }
  for (int i = 0; i < dim_; ++i) y[i] = wrap01(y[i]);
  return y;
}

Mat ExpandingMap::jacobian(const Vec& x) const {
  if (kind_ == Kind::LinearToral) return A_;
  Mat J(1, 1);
  J(0, 0) = N0_ + p_.grad(x)[0];
  return J;
}

double ExpandingMap::jac_det(const Vec& x) const {
  if (kind_ == Kind::LinearToral) return detA_;
  return std::abs(N0_ + p_.grad(x)[0]);
}

Vec ExpandingMap::inverse_branch(const Vec& x, int w) const {
  if (w < 0 || w >= degree_) throw ConfigError("branch index out of range");

  if (kind_ == Kind::LinearToral) {
    Vec t(dim_);
    for (int i = 0; i < dim_; ++i) t[i] = x[i] + double(reps_[w][i]);
    Vec y = Ainv_ * t;
    for (int i = 0; i < dim_; ++i) y[i] = wrap01(y[i]);
    return y;
  }

  Vec yv(1);
  yv[0] = wrap01(newton_root(x[0] + w));
  return yv;
}

// damped Newton on the lift: N0 y + p(y) = target, seeded at target / N0;
// the lift is strictly increasing (gamma > 1), so the root is unique
double ExpandingMap::newton_root(double target) const {
  double y = target / N0_;
  Vec yv(1);
  yv[0] = y;
  double g = N0_ * y + p_.eval(yv) - target;
  for (int it = 0; it < 100; ++it) {
    if (std::abs(g) < 1e-12) return y;
    double dg = N0_ + p_.grad(yv)[0];
    double step = -g / dg;
    double t = 1.0;
    while (t > 1e-4) {
      Vec cand(1);
      cand[0] = y + t * step;
      double gc = N0_ * cand[0] + p_.eval(cand) - target;
      if (std::abs(gc) <= (1.0 - 0.5 * t) * std::abs(g)) {
        y = cand[0];
        g = gc;
        break;
      }
      t *= 0.5;
    }
    if (t <= 1e-4)
      throw NewtonDivergence("inverse branch line search stalled");
    yv[0] = y;
  }
  throw NewtonDivergence("inverse branch Newton did not reach 1e-12 in 100 iterations");
}

std::vector<Vec> ExpandingMap::preimages(const Vec& x) const {
  std::vector<Vec> out;
  out.reserve(degree_);
  for (int w = 0; w < degree_; ++w) out.push_back(inverse_branch(x, w));
  return out;
}

PreimageTree ExpandingMap::preimage_tree(const Vec& x, int depth,
                                         std::uint64_t budget) const {
  PreimageTree t;
  t.depth = depth;
  t.degree = degree_;
  t.level.resize(depth + 1);
  t.level[0] = {x};
  std::uint64_t total = 1;
  for (int k = 0; k < depth; ++k) {
    std::uint64_t next = t.level[k].size() * std::uint64_t(degree_);
    if (total + next > budget)
      throw BudgetExceeded("preimage tree would exceed its node budget");
    total += next;
    t.level[k + 1].resize(next);
    for (std::size_t i = 0; i < t.level[k].size(); ++i)
      for (int w = 0; w < degree_; ++w)
        t.level[k + 1][i * degree_ + w] = inverse_branch(t.level[k][i], w);
  }
  return t;
}

//---------------------------------------------------------------------------
// periodic orbits via contracting backward words
//---------------------------------------------------------------------------

std::vector<PeriodicOrbit> ExpandingMap::periodic_orbits(int p_max) const {
  std::vector<PeriodicOrbit> orbits;

  auto canonical_word = [](const std::vector<int>& w) {
    // lexicographically least among rotations, and aperiodic
    const int p = int(w.size());
    for (int r = 1; r < p; ++r) {
      bool less = false, equal = true;
      for (int i = 0; i < p; ++i) {
        int a = w[(i + r) % p], b = w[i];
        if (a != b) {
          less = a < b;
          equal = false;
          break;
        }
      }
      if (less || equal) return false; // rotation smaller, or word periodic
    }
    return true;
  };

  auto orbit_key = [this](const PeriodicOrbit& o) {
    // lexicographically least point, for ordering and deduplication
    Vec best = o.points[0];
    for (const auto& q : o.points) {
      for (int i = 0; i < dim_; ++i) {
        if (q[i] < best[i] - 1e-12) {
          best = q;
          break;
        }
        if (q[i] > best[i] + 1e-12) break;
      }
    }
    return best;
  };

  for (int p = 1; p <= p_max; ++p) {
    std::vector<int> w(p, 0);
    const int cycles = int(std::ceil(60.0 / (p * std::log2(gamma_)))) + 8;
    while (true) {
      if (p == 1 || canonical_word(w)) {
        Vec z(dim_);
        if (kind_ == Kind::LinearToral) {
          // the word fixes an affine contraction, so the orbit point is the
          // exact rational solution of (A^p - I) z = sum_j A^j rep[w_j]
          Mat Ap = Mat::Identity(dim_, dim_);
          Vec rhs = Vec::Zero(dim_);
          for (int j = 0; j < p; ++j) {
            Vec rj(dim_);
            for (int i = 0; i < dim_; ++i) rj[i] = double(reps_[w[j]][i]);
            rhs += Ap * rj;
            Ap = A_ * Ap;
          }
          Mat M = Ap - Mat::Identity(dim_, dim_);
          z = M.fullPivLu().solve(rhs);
          for (int i = 0; i < dim_; ++i) z[i] = wrap01(z[i]);
        } else {
          // backward iteration of the reversed word contracts on the lift;
          // wrapping only at the end keeps seam limits from oscillating
          double zl = 0.543210987;
          for (int c = 0; c < cycles; ++c)
            for (int j = p - 1; j >= 0; --j) zl = newton_root(zl + w[j]);
          z[0] = wrap01(zl);
        }
        PeriodicOrbit o;
        o.period = p;
        o.points.resize(p);
        o.points[0] = z;
        for (int j = 1; j < p; ++j) o.points[j] = eval(o.points[j - 1]);
        if (torus_dist(eval(o.points[p - 1]), o.points[0]) > 1e-9)
          throw NumericError("periodic orbit iteration failed to close up");

        bool minimal = true; // aperiodic words give minimal periods; verify
        for (int q = 1; q < p; ++q)
          if (p % q == 0 && torus_dist(o.points[q], o.points[0]) < 1e-8)
            minimal = false;

        if (minimal) {
          bool dup = false;
          for (const auto& prev : orbits) {
            if (prev.period != p) continue;
            for (const auto& q : prev.points)
              if (torus_dist(q, o.points[0]) < 1e-8) dup = true;
          }
          if (!dup) orbits.push_back(std::move(o));
        }
      }
      // odometer over words
      int i = p - 1;
      while (i >= 0 && w[i] == degree_ - 1) w[i--] = 0;
      if (i < 0) break;
      ++w[i];
    }
  }

  std::sort(orbits.begin(), orbits.end(),
            [&](const PeriodicOrbit& a, const PeriodicOrbit& b) {
              if (a.period != b.period) return a.period < b.period;
              Vec ka = orbit_key(a), kb = orbit_key(b);
              for (int i = 0; i < dim_; ++i)
                if (ka[i] != kb[i]) return ka[i] < kb[i];
              return false;
            });
  return orbits;
}

//---------------------------------------------------------------------------
// fiber translation
//---------------------------------------------------------------------------

FiberRotation::FiberRotation(int base_dim, std::vector<TrigPoly> components)
    : base_dim_(base_dim), comp_(std::move(components)) {
  if (comp_.empty() || comp_.size() > 2)
    throw ConfigError("fiber dimension must be 1 or 2");
  for (const auto& c : comp_)
    if (c.dim() != base_dim_)
      throw ConfigError("fiber component dimension mismatch");

  // certified sup |D tau|_2 <= min(l^1 bound, inflated grid max)
  double l1 = 0.0, hess = 0.0;
  for (const auto& c : comp_) {
    l1 += c.grad_l1() * c.grad_l1();
    hess += c.hess_l1();
  }
  l1 = std::sqrt(l1); // Frobenius-style bound dominates the 2-norm

  const int G = (base_dim_ == 1) ? 4096 : 256;
  double grid_max = 0.0;
  std::vector<int> idx(base_dim_, 0);
  while (true) {
    Vec x(base_dim_);
    for (int i = 0; i < base_dim_; ++i) x[i] = double(idx[i]) / G;
    Mat J = jacobian(x);
    double nrm;
    if (base_dim_ == 1) {
      nrm = J.col(0).norm();
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd((Eigen::MatrixXd(J)));
      nrm = svd.singularValues().maxCoeff();
    }
    grid_max = std::max(grid_max, nrm);
    int i = base_dim_ - 1;
    while (i >= 0 && ++idx[i] == G) idx[i--] = 0;
    if (i < 0) break;
  }
  double inflated = grid_max + hess * 0.5 * std::sqrt(double(base_dim_)) / G;
  dtau_sup_ = std::min(l1, inflated);
}

Vec FiberRotation::eval(const Vec& x) const {
  Vec v(fiber_dim());
  for (int i = 0; i < fiber_dim(); ++i) v[i] = comp_[i].eval(x);
  return v;
}

Mat FiberRotation::jacobian(const Vec& x) const {
  Mat J(fiber_dim(), base_dim_);
  for (int i = 0; i < fiber_dim(); ++i) J.row(i) = comp_[i].grad(x).transpose();
  return J;
}

} // namespace skewmix
