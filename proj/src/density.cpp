#include "skewmix/density.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>

#include "skewmix/errors.hpp"
#include "skewmix/fft.hpp"

namespace skewmix {

//---------------------------------------------------------------------------
// fft wrappers
//---------------------------------------------------------------------------

namespace {

std::vector<cplx> run_plan(const std::vector<cplx>& in, int n0, int n1,
                           bool inverse) {
  const std::size_t n = in.size();
  fftw_complex* buf = fftw_alloc_complex(n);
  for (std::size_t i = 0; i < n; ++i) {
    buf[i][0] = in[i].real();
    buf[i][1] = in[i].imag();
  }
  fftw_plan plan =
      (n1 == 0)
          ? fftw_plan_dft_1d(n0, buf, buf,
                             inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                             FFTW_ESTIMATE)
          : fftw_plan_dft_2d(n0, n1, buf, buf,
                             inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                             FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  std::vector<cplx> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = cplx(buf[i][0], buf[i][1]);
  fftw_free(buf);
  return out;
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// evaluate sum_{|k|<=Kt} c_k e^{2 pi i k y} from a length-G DFT array
// (c_k = dft[k mod G]/G) at one point, by symmetric Horner
cplx eval_spectrum_1d(const std::vector<cplx>& dft, int Kt, double y) {
  const int G = int(dft.size());
  const cplx z = std::polar(1.0, kTwoPi * y);
  const cplx zb = std::conj(z);
  cplx acc_p = 0.0, acc_m = 0.0;
  for (int k = Kt; k >= 1; --k) {
    acc_p = (acc_p + dft[k]) * z;
    acc_m = (acc_m + dft[G - k]) * zb;
  }
  return (dft[0] + acc_p + acc_m) / double(G);
}

} // namespace

std::vector<cplx> fft_1d(const std::vector<cplx>& in, bool inverse) {
  return run_plan(in, int(in.size()), 0, inverse);
}

std::vector<cplx> fft_2d(const std::vector<cplx>& in, int n0, int n1,
                         bool inverse) {
  if (int(in.size()) != n0 * n1) throw ConfigError("fft_2d size mismatch");
  return run_plan(in, n0, n1, inverse);
}

//---------------------------------------------------------------------------
// density model
//---------------------------------------------------------------------------

double DensityModel::eval(const Vec& x) const {
  if (K == 0) return coef.empty() ? 1.0 : coef[0].real();
  if (dim == 1) {
    const cplx z = std::polar(1.0, kTwoPi * x[0]);
    const cplx zb = std::conj(z);
    cplx acc_p = 0.0, acc_m = 0.0;
    for (int k = K; k >= 1; --k) {
      acc_p = (acc_p + coef[K + k]) * z;
      acc_m = (acc_m + coef[K - k]) * zb;
    }
    return (coef[K] + acc_p + acc_m).real();
  }
  const int n = 2 * K + 1;
  cplx v = 0.0;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2)
      v += coef[(k1 + K) * n + (k2 + K)] *
           std::polar(1.0, kTwoPi * (k1 * x[0] + k2 * x[1]));
  return v.real();
}

std::complex<double> DensityModel::coef_at(const VecI& k) const {
  for (int i = 0; i < k.size(); ++i)
    if (std::abs(k[i]) > K) return 0.0;
  if (dim == 1) return coef[k[0] + K];
  return coef[(k[0] + K) * (2 * K + 1) + (k[1] + K)];
}

//---------------------------------------------------------------------------
// transfer operator on grid samples
//---------------------------------------------------------------------------

std::vector<double> transfer_apply(const ExpandingMap& map,
                                   const std::vector<double>& f, int grid) {
  if (!power_of_two(grid) || grid < 4 * map.degree())
    throw ConfigError("transfer grid must be a power of two, at least 4x the degree");

  if (map.dim() == 1) {
    if (int(f.size()) != grid) throw ConfigError("transfer grid size mismatch");
    std::vector<cplx> fc(f.begin(), f.end());
    auto dft = fft_1d(fc);
    const int Kt = grid / 2 - 1; // drop the Nyquist line
    std::vector<double> out(grid);
    Vec x(1);
    for (int i = 0; i < grid; ++i) {
      x[0] = double(i) / grid;
      double acc = 0.0;
      for (int w = 0; w < map.degree(); ++w) {
        Vec y = map.inverse_branch(x, w);
        acc += eval_spectrum_1d(dft, Kt, y[0]).real() / map.jac_det(y);
      }
      out[i] = acc;
    }
    return out;
  }

  // d = 2 is linear toral only: L acts on coefficients as c(m) <- c(A^t m)
  if (int(f.size()) != grid * grid)
    throw ConfigError("transfer grid size mismatch");
  std::vector<cplx> fc(f.begin(), f.end());
  auto dft = fft_2d(fc, grid, grid);
  Mat At = map.jacobian(Vec::Zero(2)).transpose();
  const int H = grid / 2;
  std::vector<cplx> out_dft(std::size_t(grid) * grid, 0.0);
  auto at = [&](int k1, int k2) -> cplx& {
    return out_dft[std::size_t((k1 % grid + grid) % grid) * grid +
                   std::size_t((k2 % grid + grid) % grid)];
  };
  for (int m1 = -H + 1; m1 < H; ++m1)
    for (int m2 = -H + 1; m2 < H; ++m2) {
      long n1 = std::lround(At(0, 0) * m1 + At(0, 1) * m2);
      long n2 = std::lround(At(1, 0) * m1 + At(1, 1) * m2);
      if (std::abs(n1) >= H || std::abs(n2) >= H) continue;
      at(m1, m2) = dft[std::size_t((n1 % grid + grid) % grid) * grid +
                       std::size_t((n2 % grid + grid) % grid)];
    }
  auto back = fft_2d(out_dft, grid, grid, true);
  std::vector<double> out(back.size());
  for (std::size_t i = 0; i < back.size(); ++i)
    out[i] = back[i].real() / double(grid * grid);
  return out;
}

//---------------------------------------------------------------------------
// invariant density
//---------------------------------------------------------------------------

DensityModel invariant_density(const ExpandingMap& map, int grid, int K_keep,
                               double tol, int max_iter) {
  DensityModel h;
  h.dim = map.dim();

  if (map.kind() == ExpandingMap::Kind::LinearToral) {
    // constant Jacobian: Lebesgue measure is exactly invariant
    h.K = 0;
    h.coef = {1.0};
    h.residual = 0.0;
    h.min_value = 1.0;
    return h;
  }

  if (!power_of_two(grid) || grid < 4 * map.degree())
    throw ConfigError("density grid must be a power of two, at least 4x the degree");

  // cache branch data once; the grid never moves
  const int B = map.degree();
  std::vector<double> ys(std::size_t(grid) * B), jac(std::size_t(grid) * B);
  {
    Vec x(1);
    for (int i = 0; i < grid; ++i) {
      x[0] = double(i) / grid;
      for (int w = 0; w < B; ++w) {
        Vec y = map.inverse_branch(x, w);
        ys[std::size_t(i) * B + w] = y[0];
        jac[std::size_t(i) * B + w] = map.jac_det(y);
      }
    }
  }

  const int Kt = std::min(256, grid / 2 - 1); // analytic iterates decay fast
  std::vector<double> f(grid, 1.0), fnew(grid);
  bool settled = false;
  for (int it = 0; it < max_iter && !settled; ++it) {
    std::vector<cplx> fc(f.begin(), f.end());
    auto dft = fft_1d(fc);
    double diff = 0.0;
    for (int i = 0; i < grid; ++i) {
      double acc = 0.0;
      for (int w = 0; w < B; ++w)
        acc += eval_spectrum_1d(dft, Kt, ys[std::size_t(i) * B + w]).real() /
               jac[std::size_t(i) * B + w];
      fnew[i] = acc;
      diff = std::max(diff, std::abs(acc - f[i]));
    }
    f.swap(fnew);
    settled = diff < tol;
  }
  if (!settled)
    throw NonConvergence("density power iteration did not settle");

  // coefficients, trimmed and normalized to mean one
  std::vector<cplx> fc(f.begin(), f.end());
  auto dft = fft_1d(fc);
  int Kh = 1;
  for (int k = 1; k <= std::min(K_keep, grid / 2 - 1); ++k)
    if (std::abs(dft[k]) / grid > 1e-14) Kh = k;
  h.K = Kh;
  h.coef.assign(2 * Kh + 1, 0.0);
  const cplx mean = dft[0] / double(grid);
  for (int k = -Kh; k <= Kh; ++k)
    h.coef[k + Kh] = dft[(k % grid + grid) % grid] / double(grid) / mean;

  // audits: invariance residual on a fresh grid, positivity margin
  const int Ga = 2048;
  double res = 0.0;
  Vec x(1);
  for (int i = 0; i < Ga; ++i) {
    x[0] = double(i) / Ga;
    double acc = 0.0;
    for (int w = 0; w < B; ++w) {
      Vec y = map.inverse_branch(x, w);
      acc += h.eval(y) / map.jac_det(y);
    }
    res = std::max(res, std::abs(acc - h.eval(x)));
  }
  h.residual = res;
  if (res > 1e-8)
    throw NumericError("invariant density failed its invariance audit");

  double mn = 1e300;
  for (int i = 0; i < grid; ++i) {
    x[0] = double(i) / grid;
    mn = std::min(mn, h.eval(x));
  }
  h.min_value = mn;
  if (mn <= 0.0)
    throw NumericError("invariant density lost positivity");
  return h;
}

//---------------------------------------------------------------------------
// tower weights
//---------------------------------------------------------------------------

double weight_A(const ExpandingMap& map, const DensityModel& h, const Vec& y,
                int n) {
  Vec z = y;
  if (n <= 20) {
    double J = 1.0;
    for (int k = 0; k < n; ++k) {
      J *= map.jac_det(z);
      z = map.eval(z);
    }
    return h.eval(y) / (J * h.eval(z));
  }
  // log space keeps deep towers finite
  double lj = 0.0;
  for (int k = 0; k < n; ++k) {
    lj += std::log(map.jac_det(z));
    z = map.eval(z);
  }
  return std::exp(std::log(h.eval(y)) - lj - std::log(h.eval(z)));
}

} // namespace skewmix
