#include "skewmix/twisted.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <random>

#include "skewmix/errors.hpp"
#include "skewmix/fft.hpp"

namespace skewmix {

double SobolevWeight::operator()(const VecI& xi) const {
  const double xi2 = double(xi.squaredNorm());
  if (style == Style::StandardBracket) {
    const double nub = std::sqrt(1.0 + double(nu.squaredNorm()));
    return std::pow(nub, -s) * std::pow(std::sqrt(1.0 + xi2), s);
  }
  if (!g) throw ConfigError("symbol-style weight needs the radial profile g");
  const double nn = std::max(1.0, std::sqrt(double(nu.squaredNorm())));
  return std::pow(g->eval(std::sqrt(xi2) / nn), s);
}

namespace {

int grid_for(int K) {
  int g = 256;
  while (g < 8 * K) g *= 2;
  return g;
}

// multiplier coefficients m(x) = e^{2 pi i nu.tau(x)} on a fine grid, plus
// the relative mass its spectrum leaks past |k|_inf <= K
struct Multiplier {
  std::vector<cplx> dft; // length G (d=1) or G*G (d=2), unnormalized
  int G = 0;
  double tail_mass = 0.0;
};

Multiplier multiplier(const ExpandingMap& map, const FiberRotation& tau,
                      const VecI& nu, int K) {
  Multiplier m;
  m.G = grid_for(K);
  const int d = map.dim();
  if (d == 1) {
    std::vector<cplx> v(m.G);
    Vec x(1);
    for (int i = 0; i < m.G; ++i) {
      x[0] = double(i) / m.G;
      double ph = 0.0;
      Vec tv = tau.eval(x);
      for (int c = 0; c < nu.size(); ++c) ph += nu[c] * tv[c];
      v[i] = std::polar(1.0, kTwoPi * ph);
    }
    m.dft = fft_1d(v);
    double inside = 0.0, total = 0.0;
    for (int k = -m.G / 2 + 1; k < m.G / 2; ++k) {
      double a = std::abs(m.dft[(k % m.G + m.G) % m.G]);
      total += a;
      if (std::abs(k) <= K) inside += a;
    }
    m.tail_mass = (total > 0.0) ? (total - inside) / total : 0.0;
  } else {
    std::vector<cplx> v(std::size_t(m.G) * m.G);
    Vec x(2);
    for (int i = 0; i < m.G; ++i)
      for (int j = 0; j < m.G; ++j) {
        x[0] = double(i) / m.G;
        x[1] = double(j) / m.G;
        double ph = 0.0;
        Vec tv = tau.eval(x);
        for (int c = 0; c < nu.size(); ++c) ph += nu[c] * tv[c];
        v[std::size_t(i) * m.G + j] = std::polar(1.0, kTwoPi * ph);
      }
    m.dft = fft_2d(v, m.G, m.G);
    double inside = 0.0, total = 0.0;
    for (int k1 = -m.G / 2 + 1; k1 < m.G / 2; ++k1)
      for (int k2 = -m.G / 2 + 1; k2 < m.G / 2; ++k2) {
        double a = std::abs(m.dft[std::size_t((k1 % m.G + m.G) % m.G) * m.G +
                                  ((k2 % m.G + m.G) % m.G)]);
        total += a;
        if (std::abs(k1) <= K && std::abs(k2) <= K) inside += a;
      }
    m.tail_mass = (total > 0.0) ? (total - inside) / total : 0.0;
  }
  return m;
}

cplx dft_at(const Multiplier& m, int d, const VecI& k) {
  if (d == 1) {
    if (std::abs(k[0]) >= m.G / 2) return 0.0;
    return m.dft[(k[0] % m.G + m.G) % m.G] / double(m.G);
  }
  if (std::abs(k[0]) >= m.G / 2 || std::abs(k[1]) >= m.G / 2) return 0.0;
  return m.dft[std::size_t((k[0] % m.G + m.G) % m.G) * m.G +
               ((k[1] % m.G + m.G) % m.G)] /
         (double(m.G) * m.G);
}

} // namespace

//---------------------------------------------------------------------------
// assembly
//---------------------------------------------------------------------------

TwistedMatrix assemble_koopman(const ExpandingMap& map,
                               const FiberRotation& tau, const VecI& nu,
                               int K) {
  const int d = map.dim();
  const int N = lat_size(d, K);
  TwistedMatrix tm;
  tm.d = d;
  tm.K = K;
  tm.nu = nu;

  Multiplier mult = multiplier(map, tau, nu, K);
  tm.alias_mass = mult.tail_mass;
  tm.aliasing_warning = mult.tail_mass > 1e-6;
  tm.M.resize(N, N);

  if (map.kind() == ExpandingMap::Kind::LinearToral) {
    // phi_{xi'}(T x) = e^{2 pi i (A^t xi').x}: a pure coefficient shift
    Mat At = map.jacobian(Vec::Zero(d)).transpose();
    for (int col = 0; col < N; ++col) {
      VecI xip = lat_decode(d, K, col);
      VecI shift(d);
      for (int i = 0; i < d; ++i) {
        double v = 0.0;
        for (int j = 0; j < d; ++j) v += At(i, j) * xip[j];
        shift[i] = int(std::lround(v));
      }
      for (int row = 0; row < N; ++row) {
        VecI xi = lat_decode(d, K, row);
        tm.M(row, col) = dft_at(mult, d, VecI(xi - shift));
      }
    }
    return tm;
  }

  // generic path (d = 1): one FFT per column of m(x) e^{2 pi i xi' T(x)}
  const int G = mult.G;
  std::vector<double> Tx(G);
  std::vector<cplx> mx(G);
  Vec x(1);
  for (int i = 0; i < G; ++i) {
    x[0] = double(i) / G;
    Tx[i] = map.eval(x)[0];
    double ph = 0.0;
    Vec tv = tau.eval(x);
    for (int c = 0; c < nu.size(); ++c) ph += nu[c] * tv[c];
    mx[i] = std::polar(1.0, kTwoPi * ph);
  }
  std::vector<cplx> colfun(G);
  for (int col = 0; col < N; ++col) {
    const int xip = col - K;
    for (int i = 0; i < G; ++i)
      colfun[i] = mx[i] * std::polar(1.0, kTwoPi * xip * Tx[i]);
    auto dft = fft_1d(colfun);
    for (int row = 0; row < N; ++row) {
      int xi = row - K;
      tm.M(row, col) = dft[(xi % G + G) % G] / double(G);
    }
  }
  return tm;
}

TwistedMatrix assemble_transfer(const ExpandingMap& map,
                                const FiberRotation& tau, const VecI& nu,
                                int K) {
  const int d = map.dim();
  const int N = lat_size(d, K);
  TwistedMatrix tm;
  tm.d = d;
  tm.K = K;
  tm.nu = nu;

  Multiplier mult = multiplier(map, tau, nu, K);
  tm.alias_mass = mult.tail_mass;
  tm.aliasing_warning = mult.tail_mass > 1e-6;
  tm.M.resize(N, N);

  const int G = grid_for(K);
  const int B = map.degree();

  if (d == 1) {
    // cache branch points and their twisted prefactors across columns
    std::vector<double> yb(std::size_t(G) * B);
    std::vector<cplx> pref(std::size_t(G) * B);
    Vec x(1);
    for (int i = 0; i < G; ++i) {
      x[0] = double(i) / G;
      for (int w = 0; w < B; ++w) {
        Vec y = map.inverse_branch(x, w);
        yb[std::size_t(i) * B + w] = y[0];
        double ph = 0.0;
        Vec tv = tau.eval(y);
        for (int c = 0; c < nu.size(); ++c) ph += nu[c] * tv[c];
        pref[std::size_t(i) * B + w] =
            std::polar(1.0, kTwoPi * ph) / map.jac_det(y);
      }
    }
    std::vector<cplx> colfun(G);
    for (int col = 0; col < N; ++col) {
      const int xip = col - K;
      for (int i = 0; i < G; ++i) {
        cplx acc = 0.0;
        for (int w = 0; w < B; ++w)
          acc += pref[std::size_t(i) * B + w] *
                 std::polar(1.0, kTwoPi * xip * yb[std::size_t(i) * B + w]);
        colfun[i] = acc;
      }
      auto dft = fft_1d(colfun);
      for (int row = 0; row < N; ++row) {
        int xi = row - K;
        tm.M(row, col) = dft[(xi % G + G) % G] / double(G);
      }
    }
    return tm;
  }

  // d = 2: same construction on a product grid
  const int Gg = std::max(64, 8 * K);
  int G2 = 64;
  while (G2 < Gg) G2 *= 2;
  std::vector<Vec> ybs(std::size_t(G2) * G2 * B);
  std::vector<cplx> pref(std::size_t(G2) * G2 * B);
  Vec x(2);
  for (int i = 0; i < G2; ++i)
    for (int j = 0; j < G2; ++j) {
      x[0] = double(i) / G2;
      x[1] = double(j) / G2;
      std::size_t base = (std::size_t(i) * G2 + j) * B;
      for (int w = 0; w < B; ++w) {
        Vec y = map.inverse_branch(x, w);
        ybs[base + w] = y;
        double ph = 0.0;
        Vec tv = tau.eval(y);
        for (int c = 0; c < nu.size(); ++c) ph += nu[c] * tv[c];
        pref[base + w] = std::polar(1.0, kTwoPi * ph) / map.jac_det(y);
      }
    }
  std::vector<cplx> colfun(std::size_t(G2) * G2);
  for (int col = 0; col < N; ++col) {
    VecI xip = lat_decode(d, K, col);
    for (std::size_t cell = 0; cell < colfun.size(); ++cell) {
      cplx acc = 0.0;
      for (int w = 0; w < B; ++w) {
        const Vec& y = ybs[cell * B + w];
        acc += pref[cell * B + w] *
               std::polar(1.0, kTwoPi * (xip[0] * y[0] + xip[1] * y[1]));
      }
      colfun[cell] = acc;
    }
    auto dft = fft_2d(colfun, G2, G2);
    for (int row = 0; row < N; ++row) {
      VecI xi = lat_decode(d, K, row);
      tm.M(row, col) =
          dft[std::size_t((xi[0] % G2 + G2) % G2) * G2 +
              ((xi[1] % G2 + G2) % G2)] /
          (double(G2) * G2);
    }
  }
  return tm;
}

//---------------------------------------------------------------------------
// norms, radii
//---------------------------------------------------------------------------

std::vector<double> weighted_norm_growth(const TwistedMatrix& tm,
                                         const SobolevWeight& w, int n_max) {
  const int N = int(tm.M.rows());
  Eigen::VectorXd wd(N);
  for (int i = 0; i < N; ++i) wd[i] = w(lat_decode(tm.d, tm.K, i));
  Eigen::MatrixXcd Mw = wd.asDiagonal() * tm.M *
                        wd.cwiseInverse().asDiagonal();
  std::vector<double> norms;
  norms.reserve(n_max);
  Eigen::MatrixXcd P = Mw;
  for (int n = 1; n <= n_max; ++n) {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(P);
    norms.push_back(svd.singularValues()[0]);
    if (n < n_max) P = P * Mw;
  }
  return norms;
}

SpectralRadiusResult spectral_radius(const ExpandingMap& map,
                                     const FiberRotation& tau, const VecI& nu,
                                     int K, double s,
                                     SobolevWeight::Style style,
                                     const WeightG* g, int n_norms) {
  TwistedMatrix tm = assemble_transfer(map, tau, nu, K);

  auto eig_radius = [](const Eigen::MatrixXcd& M, cplx* lead) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, false);
    double r = 0.0;
    cplx lv = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      cplx z = es.eigenvalues()[i];
      double a = std::abs(z);
      // deterministic tie-breaking for the reported eigenvalue
      if (a > r + 1e-15 ||
          (std::abs(a - r) <= 1e-15 &&
           (z.real() > lv.real() + 1e-15 ||
            (std::abs(z.real() - lv.real()) <= 1e-15 &&
             z.imag() > lv.imag())))) {
        r = a;
        lv = z;
      }
    }
    if (lead) *lead = lv;
    return r;
  };

  SpectralRadiusResult res;
  res.K = K;
  res.aliasing_warning = tm.aliasing_warning;
  res.radius = eig_radius(tm.M, &res.lead);

  // nested truncation: the |xi|_inf <= K/2 principal sub-block is exactly
  // the K/2 Galerkin matrix
  const int Kh = K / 2;
  const int Nh = lat_size(tm.d, Kh);
  Eigen::MatrixXcd sub(Nh, Nh);
  for (int r = 0; r < Nh; ++r)
    for (int c = 0; c < Nh; ++c)
      sub(r, c) = tm.M(lat_encode(tm.d, K, lat_decode(tm.d, Kh, r)),
                       lat_encode(tm.d, K, lat_decode(tm.d, Kh, c)));
  double r_half = eig_radius(sub, nullptr);
  double delta = std::abs(res.radius - r_half);
  if (delta > 1e-6)
    throw NotConverged("spectral radius unstable under lattice refinement");
  res.uncertainty = std::max(delta, 1e-9);

  // Gelfand tail: slope of log norms on the last third of [20, 40]
  SobolevWeight w{style, s, nu, g};
  const int tail_hi = 40;
  auto norms = weighted_norm_growth(tm, w, std::max(tail_hi, n_norms));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int n = 34; n <= tail_hi; ++n) {
    double ln = std::log(std::max(norms[n - 1], 1e-300));
    sx += n;
    sy += ln;
    sxx += double(n) * n;
    sxy += n * ln;
    ++cnt;
  }
  res.gelfand = std::exp((cnt * sxy - sx * sy) / (cnt * sxx - sx * sx));
  norms.resize(n_norms);
  res.norms = std::move(norms);
  return res;
}

//---------------------------------------------------------------------------
// residual probes
//---------------------------------------------------------------------------

namespace {

double operator_residual(const ExpandingMap& map, const FiberRotation& tau,
                         const VecI& nu, const TwistedMatrix& tm,
                         unsigned seed, bool koopman) {
  const int d = tm.d, K = tm.K, N = lat_size(d, K);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int Kp = std::max(1, K / 2);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(N);
    for (int i = 0; i < N; ++i) {
      VecI xi = lat_decode(d, K, i);
      bool small = true;
      for (int j = 0; j < d; ++j) small &= std::abs(xi[j]) <= Kp;
      if (small) c[i] = cplx(U(rng), U(rng));
    }
    Eigen::VectorXcd mc = tm.M * c;
    auto eval_poly = [&](const Eigen::VectorXcd& cf, const Vec& x) {
      cplx acc = 0.0;
      for (int i = 0; i < N; ++i) {
        if (cf[i] == 0.0) continue;
        VecI xi = lat_decode(d, K, i);
        double ph = 0.0;
        for (int j = 0; j < d; ++j) ph += xi[j] * x[j];
        acc += cf[i] * std::polar(1.0, kTwoPi * ph);
      }
      return acc;
    };
    if (koopman) {
      // composition with T spreads the probe spectrum past K, which the
      // Galerkin matrix truncates by design; compare against the exact
      // band-limited projection of the direct image instead
      auto twist_at = [&](const Vec& x) {
        double ph = 0.0;
        Vec tv = tau.eval(x);
        for (int cc = 0; cc < nu.size(); ++cc) ph += nu[cc] * tv[cc];
        return std::polar(1.0, kTwoPi * ph);
      };
      int G = d == 1 ? 256 : 64;
      while (G < 8 * K) G <<= 1;
      if (d == 1) {
        std::vector<cplx> f(G);
        Vec x(1);
        for (int t = 0; t < G; ++t) {
          x[0] = double(t) / G;
          f[t] = twist_at(x) * eval_poly(c, map.eval(x));
        }
        auto F = fft_1d(f);
        for (int xi = -K; xi <= K; ++xi) {
          VecI kv(1);
          kv << xi;
          cplx chat = F[std::size_t((xi % G + G) % G)] / double(G);
          worst = std::max(worst,
                           std::abs(chat - mc[lat_encode(1, K, kv)]));
        }
      } else {
        std::vector<cplx> f(std::size_t(G) * G);
        Vec x(2);
        for (int t0 = 0; t0 < G; ++t0)
          for (int t1 = 0; t1 < G; ++t1) {
            x[0] = double(t0) / G;
            x[1] = double(t1) / G;
            f[std::size_t(t0) * G + t1] =
                twist_at(x) * eval_poly(c, map.eval(x));
          }
        auto F = fft_2d(f, G, G);
        for (int i = 0; i < N; ++i) {
          VecI kv = lat_decode(d, K, i);
          int r0 = (kv[0] % G + G) % G, r1 = (kv[1] % G + G) % G;
          cplx chat = F[std::size_t(r0) * G + r1] / double(G * G);
          worst = std::max(worst, std::abs(chat - mc[i]));
        }
      }
    } else {
      const int S = 512;
      for (int t = 0; t < S; ++t) {
        Vec x(d);
        x[0] = (t + 0.371) / S;
        if (d == 2) x[1] = wrap01(0.5 + 0.7548776662 * t);
        cplx direct = 0.0;
        for (int w = 0; w < map.degree(); ++w) {
          Vec y = map.inverse_branch(x, w);
          double ph = 0.0;
          Vec tv = tau.eval(y);
          for (int cc = 0; cc < nu.size(); ++cc) ph += nu[cc] * tv[cc];
          direct += std::polar(1.0, kTwoPi * ph) * eval_poly(c, y) /
                    map.jac_det(y);
        }
        worst = std::max(worst, std::abs(direct - eval_poly(mc, x)));
      }
    }
  }
  return worst;
}

} // namespace

double koopman_residual(const ExpandingMap& map, const FiberRotation& tau,
                        const VecI& nu, const TwistedMatrix& tm,
                        unsigned seed) {
  return operator_residual(map, tau, nu, tm, seed, true);
}

double transfer_residual(const ExpandingMap& map, const FiberRotation& tau,
                         const VecI& nu, const TwistedMatrix& tm,
                         unsigned seed) {
  return operator_residual(map, tau, nu, tm, seed, false);
}

} // namespace skewmix
