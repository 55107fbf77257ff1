#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fosense::fft {

using cplx = std::complex<double>;

enum class Direction { kForward, kInverse };

// In-place unnormalized DFT of any length.
//   forward: X[k] = sum_n x[n] e^{-j 2 pi k n / N}
//   inverse: x[n] = sum_k X[k] e^{+j 2 pi k n / N}   (no 1/N)
// Powers of two use an iterative radix-2 kernel; other lengths go through
// Bluestein's chirp-z reformulation on a padded power-of-two grid.
void transform(std::span<cplx> data, Direction dir);

/// Forward transform of real data: bins 0..N/2 of the unnormalized spectrum.
std::vector<cplx> forward_real(std::span<const double> data);

/// Inverse of forward_real: takes bins 0..N/2 of a Hermitian spectrum of
/// length n and returns the real signal, including the 1/N factor.
std::vector<double> inverse_real(std::span<const cplx> half, std::size_t n);

/// Single bin k of the forward transform of real data, in O(N).
cplx real_bin(std::span<const double> data, std::size_t k);

bool is_power_of_two(std::size_t n) noexcept;
std::size_t next_power_of_two(std::size_t n) noexcept;

}  // namespace fosense::fft
