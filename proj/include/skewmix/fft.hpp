#pragma once

#include <complex>
#include <vector>

//---------------------------------------------------------------------------
// fft: thin deterministic wrappers over FFTW
//
// Forward transform uses the e^{-2 pi i jk/n} kernel, so out[k]/n is the
// k-th Fourier coefficient of samples on the uniform grid. Data is staged
// through fftw_malloc'd scratch so plan selection never depends on caller
// buffer alignment.
//---------------------------------------------------------------------------

namespace skewmix {

using cplx = std::complex<double>;

std::vector<cplx> fft_1d(const std::vector<cplx>& in, bool inverse = false);

// row-major n0 x n1 array
std::vector<cplx> fft_2d(const std::vector<cplx>& in, int n0, int n1,
                         bool inverse = false);

} // namespace skewmix
