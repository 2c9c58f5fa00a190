#include "skewmix/symbol.hpp"

#include <cmath>

#include "skewmix/errors.hpp"

namespace skewmix {

namespace {

inline double pow2s(double q, double two_s) {
  if (two_s == -2.0) {
    double r = 1.0 / q;
    return r * r;
  }
  return std::pow(q, two_s);
}

// direction-independent per-leaf cocycle data at one base point
struct LeafCore {
  double A;  // normalized tower weight A_n(y)
  Mat Bt;    // (D_y T^n)^t
  Mat Wmat;  // W_n(y), d x l
};

// walk each leaf's ancestor chain; level[k][i / deg^{n-k}] is T^{n-k} y
std::vector<LeafCore> leaf_cores(const ExpandingMap& map,
                                 const FiberRotation& tau,
                                 const DensityModel& h, int n, const Vec& x,
                                 const PreimageTree& tree) {
  const int d = map.dim(), l = tau.fiber_dim(), deg = map.degree();
  const double hx = h.eval(x);
  std::vector<LeafCore> cores(tree.level[n].size());
  for (std::size_t i = 0; i < tree.level[n].size(); ++i) {
    LeafCore c;
    c.Bt = Mat::Identity(d, d);
    c.Wmat = Mat::Zero(d, l);
    double J = 1.0;
    std::size_t idx = i;
    for (int m = 0; m < n; ++m) { // visit T^m y, m = 0..n-1
      const Vec& P = tree.level[n - m][idx];
      c.Wmat += c.Bt * tau.jacobian(P).transpose();
      c.Bt = c.Bt * map.jacobian(P).transpose();
      J *= map.jac_det(P);
      idx /= deg;
    }
    c.A = h.eval(tree.level[n][i]) / (J * hx);
    cores[i] = std::move(c);
  }
  return cores;
}

} // namespace

//---------------------------------------------------------------------------
// cocycle pieces
//---------------------------------------------------------------------------

Vec cocycle_step(const ExpandingMap& map, const FiberRotation& tau,
                 const Vec& n_dir, const Vec& x, const Vec& xi) {
  return map.jacobian(x).transpose() * xi +
         tau.jacobian(x).transpose() * n_dir;
}

Mat w_n(const ExpandingMap& map, const FiberRotation& tau, const Vec& x,
        int n) {
  const int d = map.dim(), l = tau.fiber_dim();
  Mat W = Mat::Zero(d, l);
  Mat Bt = Mat::Identity(d, d);
  Vec z = x;
  for (int k = 0; k < n; ++k) {
    W += Bt * tau.jacobian(z).transpose();
    Bt = Bt * map.jacobian(z).transpose();
    z = map.eval(z);
  }
  return W;
}

//---------------------------------------------------------------------------
// pointwise symbol
//---------------------------------------------------------------------------

double ptilde(const ExpandingMap& map, const FiberRotation& tau,
              const DensityModel& h, const WeightG& g, double s,
              const Vec& n_dir, int n, const Vec& x, const Vec& xi) {
  auto tree = map.preimage_tree(x, n);
  auto cores = leaf_cores(map, tau, h, n, x, tree);
  const double gxi = g.eval(xi.norm());
  double acc = 0.0;
  for (const auto& c : cores) {
    Vec F = c.Bt * xi + c.Wmat * n_dir;
    acc += c.A * pow2s(g.eval(F.norm()) / gxi, 2.0 * s);
  }
  return acc;
}

double ptilde_recursive(const ExpandingMap& map, const FiberRotation& tau,
                        const DensityModel& h, const WeightG& g, double s,
                        const Vec& n_dir, int n, const Vec& x, const Vec& xi) {
  // same branch points, different traversal and different recombination:
  // depth-first in reversed branch order, cocycle factors re-multiplied
  // from the stored path at every leaf
  const int d = map.dim();
  const double hx = h.eval(x);
  const double gxi = g.eval(xi.norm());
  double acc = 0.0;
  std::vector<Vec> path; // path[j-1] = z_j, the depth-j preimage
  path.reserve(n);

  auto descend = [&](auto&& self, const Vec& z, int depth) -> void {
    if (depth == n) {
      const Vec& y = path.back();
      double J = 1.0;
      for (const Vec& q : path) J *= map.jac_det(q);
      // B^t_k = (D_y T^k)^t assembled afresh for each k
      Vec w = Vec::Zero(d);
      for (int k = 0; k < n; ++k) {
        Mat Bk = Mat::Identity(d, d);
        for (int m = 0; m < k; ++m)
          Bk = Bk * map.jacobian(path[n - 1 - m]).transpose();
        w += Bk * (tau.jacobian(path[n - 1 - k]).transpose() * n_dir);
      }
      Mat Bn = Mat::Identity(d, d);
      for (int m = 0; m < n; ++m)
        Bn = Bn * map.jacobian(path[n - 1 - m]).transpose();
      double A = h.eval(y) / (J * hx);
      Vec F = Bn * xi + w;
      acc += A * pow2s(g.eval(F.norm()) / gxi, 2.0 * s);
      return;
    }
    for (int wbr = map.degree() - 1; wbr >= 0; --wbr) {
      path.push_back(map.inverse_branch(z, wbr));
      self(self, path.back(), depth + 1);
      path.pop_back();
    }
  };
  descend(descend, x, 0);
  return acc;
}

//---------------------------------------------------------------------------
// grid field and the contraction exponent
//---------------------------------------------------------------------------

namespace {

// multi-index walkers over product grids
std::vector<Vec> product_grid(int dim, int per_axis, double lo, double hi,
                              bool half_open) {
  std::vector<Vec> pts;
  std::vector<int> idx(dim, 0);
  const double span = hi - lo;
  while (true) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i)
      x[i] = half_open ? lo + span * idx[i] / per_axis
                       : lo + span * idx[i] / (per_axis - 1);
    pts.push_back(x);
    int i = dim - 1;
    while (i >= 0 && ++idx[i] == per_axis) idx[i--] = 0;
    if (i < 0) break;
  }
  return pts;
}

} // namespace

PTildeField ptilde_field(const ExpandingMap& map, const FiberRotation& tau,
                         const DensityModel& h, const WeightG& g, double s,
                         const Vec& n_dir, int n, int nx, int nxi,
                         double R_grid) {
  if (nxi < 3 || nx < 2) throw ConfigError("ptilde_field grid too small");
  const int d = map.dim();
  const double Rg = (R_grid > 0.0) ? R_grid : g.R();

  PTildeField f;
  f.n = n;
  f.n_dir = n_dir;
  for (int i = 0; i < nx; ++i) f.x_grid.push_back(double(i) / nx);
  for (int j = 0; j < nxi; ++j)
    f.xi_grid.push_back(-Rg + 2.0 * Rg * j / (nxi - 1));

  auto xs = product_grid(d, nx, 0.0, 1.0, true);
  auto xis = product_grid(d, nxi, -Rg, Rg, false);
  f.values.resize(Eigen::Index(xs.size()), Eigen::Index(xis.size()));

  const double two_s = 2.0 * s;
  std::size_t trapped = 0;
  for (std::size_t ix = 0; ix < xs.size(); ++ix) {
    auto tree = map.preimage_tree(xs[ix], n);
    auto cores = leaf_cores(map, tau, h, n, xs[ix], tree);
    std::vector<Vec> wv(cores.size());
    for (std::size_t c = 0; c < cores.size(); ++c)
      wv[c] = cores[c].Wmat * n_dir;
    for (std::size_t jx = 0; jx < xis.size(); ++jx) {
      const double gxi = g.eval(xis[jx].norm());
      double acc = 0.0;
      bool all_in = true;
      for (std::size_t c = 0; c < cores.size(); ++c) {
        Vec F = cores[c].Bt * xis[jx] + wv[c];
        double nF = F.norm();
        if (nF > g.R()) all_in = false;
        acc += cores[c].A * pow2s(g.eval(nF) / gxi, two_s);
      }
      f.values(Eigen::Index(ix), Eigen::Index(jx)) = acc;
      if (all_in) ++trapped;
    }
  }

  f.grid_max = f.values.maxCoeff();
  f.exterior_bound = std::pow(0.5 * (g.gamma() + 1.0), two_s);
  f.sup = std::max(f.grid_max, f.exterior_bound);
  f.escape_fraction = double(trapped) / double(xs.size() * xis.size());

  double jump = 0.0;
  for (Eigen::Index i = 0; i < f.values.rows(); ++i)
    for (Eigen::Index j = 0; j + 1 < f.values.cols(); ++j)
      jump = std::max(jump,
                      std::abs(f.values(i, j + 1) - f.values(i, j)));
  for (Eigen::Index i = 0; i + 1 < f.values.rows(); ++i)
    for (Eigen::Index j = 0; j < f.values.cols(); ++j)
      jump = std::max(jump,
                      std::abs(f.values(i + 1, j) - f.values(i, j)));
  f.lipschitz_inflation = jump;
  return f;
}

N0Result find_n0(const ExpandingMap& map, const FiberRotation& tau,
                 const DensityModel& h, const WeightG& g, double s, int n_max,
                 double margin, int nx, int nxi, double dir_degrees) {
  const int l = tau.fiber_dim();
  std::vector<Vec> dirs;
  if (l == 1) {
    Vec p(1), m(1);
    p[0] = 1.0;
    m[0] = -1.0;
    dirs = {p, m};
  } else {
    // half circle: the antipodal field is the xi-reflection of this one,
    // and the xi grid is symmetric, so suprema coincide
    int mfull = 2 * std::max(1, int(std::ceil(180.0 / dir_degrees)));
    for (int j = 0; j < mfull / 2; ++j) {
      double th = kTwoPi * j / mfull;
      Vec v(2);
      v << std::cos(th), std::sin(th);
      dirs.push_back(v);
    }
  }

  N0Result res;
  res.R = g.R();
  res.margin = margin;
  res.per_direction.resize(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i)
    res.per_direction[i].dir = dirs[i];

  for (int n = 1; n <= n_max; ++n) {
    double sup_n = 0.0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      auto field = ptilde_field(map, tau, h, g, s, dirs[i], n, nx, nxi, 0.0);
      res.per_direction[i].sup_history.push_back(field.sup);
      sup_n = std::max(sup_n, field.sup);
    }
    if (sup_n <= 1.0 - margin) {
      res.n0 = n;
      res.ptilde0 = sup_n;
      return res;
    }
  }
  return res; // n0 empty: no uniform drop below 1 - margin up to n_max
}

} // namespace skewmix
