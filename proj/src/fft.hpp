#pragma once

#include <complex>
#include <cstddef>

namespace condlimit::detail {

/// In-place complex DFT. sign = -1 computes sum_x a_x exp(-2 pi i j x / n);
/// sign = +1 the unnormalized inverse. Plans are cached and shared; executing
/// one is thread-safe.
void dft_inplace(std::complex<double>* data, std::size_t n, int sign);

/// In-place 2-D DFT over an n0 x n1 row-major array.
void dft2_inplace(std::complex<double>* data, std::size_t n0, std::size_t n1, int sign);

}  // namespace condlimit::detail
