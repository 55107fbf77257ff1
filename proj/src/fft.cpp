#include "fosense/fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace fosense::fft {

namespace {

void bit_reverse_permute(std::span<cplx> a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
}

// Forward twiddles exp(-2*pi*j*k/n), k < n/2, cached per length. Each entry
// is evaluated directly (no recurrence) so the error stays at a few ulps.
const std::vector<cplx>& forward_twiddles(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::vector<cplx>> cache;
  auto& tw = cache[n];
  if (tw.empty()) {
    tw.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
      tw[k] = {std::cos(ang), std::sin(ang)};
    }
  }
  return tw;
}

void radix2(std::span<cplx> a, Direction dir) {
  const std::size_t n = a.size();
  if (n < 2) return;
  bit_reverse_permute(a);

  const std::vector<cplx>& tw = forward_twiddles(n);
  const double sign = dir == Direction::kForward ? 1.0 : -1.0;

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        // Written out by hand: std::complex operator* carries NaN
        // recovery that dominates the butterfly cost.
        const cplx u = a[i + j];
        const cplx w = tw[j * step];
        const cplx b = a[i + j + half];
        const double wi = sign * w.imag();
        const cplx v(b.real() * w.real() - b.imag() * wi,
                     b.real() * wi + b.imag() * w.real());
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

void bluestein(std::span<cplx> a, Direction dir) {
  const std::size_t n = a.size();
  const std::size_t m = next_power_of_two(2 * n - 1);
  const double sign = dir == Direction::kForward ? -1.0 : 1.0;

  // chirp[k] = exp(sign * j*pi*k^2/n); k^2 is reduced mod 2n first so the
  // argument stays small for large k.
  std::vector<cplx> chirp(n);
  const unsigned long long two_n = 2ULL * n;
  for (std::size_t k = 0; k < n; ++k) {
    const unsigned long long kk =
        (static_cast<unsigned long long>(k) * k) % two_n;
    const double ang = sign * std::numbers::pi * static_cast<double>(kk) /
                       static_cast<double>(n);
    chirp[k] = {std::cos(ang), std::sin(ang)};
  }

  std::vector<cplx> x(m), y(m);
  for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
  y[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    y[k] = std::conj(chirp[k]);
    y[m - k] = std::conj(chirp[k]);
  }

  radix2(x, Direction::kForward);
  radix2(y, Direction::kForward);
  for (std::size_t k = 0; k < m; ++k) x[k] *= y[k];
  radix2(x, Direction::kInverse);

  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * scale * chirp[k];
}

}  // namespace

std::vector<cplx> forward_real(std::span<const double> data) {
  const std::size_t n = data.size();
  if (n < 4 || n % 2 != 0) {
    std::vector<cplx> full(data.begin(), data.end());
    transform(full, Direction::kForward);
    full.resize(n / 2 + 1);
    return full;
  }
  // Pack even/odd samples into one half-length complex transform, then split.
  const std::size_t m = n / 2;
  std::vector<cplx> z(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = {data[2 * i], data[2 * i + 1]};
  transform(z, Direction::kForward);
  const std::vector<cplx>& tw = forward_twiddles(n);
  std::vector<cplx> out(m + 1);
  for (std::size_t k = 0; k <= m; ++k) {
    const cplx a = z[k % m];
    const cplx b = std::conj(z[(m - k) % m]);
    const cplx even = 0.5 * (a + b);
    const cplx odd = cplx(0.0, -0.5) * (a - b);
    const cplx w = k < m ? tw[k] : cplx(-1.0, 0.0);
    out[k] = even + w * odd;
  }
  return out;
}

std::vector<double> inverse_real(std::span<const cplx> half, std::size_t n) {
  if (half.size() != n / 2 + 1) {
    throw std::invalid_argument("inverse_real: expected n/2+1 bins");
  }
  if (n < 4 || n % 2 != 0) {
    std::vector<cplx> full(n);
    for (std::size_t k = 0; k < half.size(); ++k) full[k] = half[k];
    for (std::size_t k = half.size(); k < n; ++k) full[k] = std::conj(half[n - k]);
    transform(full, Direction::kInverse);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = full[i].real() / static_cast<double>(n);
    return out;
  }
  const std::size_t m = n / 2;
  const std::vector<cplx>& tw = forward_twiddles(n);
  std::vector<cplx> z(m);
  for (std::size_t k = 0; k < m; ++k) {
    const cplx a = half[k];
    const cplx b = std::conj(half[m - k]);
    const cplx even = 0.5 * (a + b);
    const cplx odd = 0.5 * (a - b) * std::conj(tw[k]);
    z[k] = even + cplx(0.0, 1.0) * odd;
  }
  transform(z, Direction::kInverse);
  std::vector<double> out(n);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    out[2 * i] = z[i].real() * scale;
    out[2 * i + 1] = z[i].imag() * scale;
  }
  return out;
}

cplx real_bin(std::span<const double> data, std::size_t k) {
  const std::size_t n = data.size();
  if (n == 0) return {};
  k %= n;
  // Angles are indexed by (i*k) mod n; for even n the upper half of the
  // circle is the negated lower half.
  thread_local std::unordered_map<std::size_t, std::vector<cplx>> odd_cache;
  const std::vector<cplx>* table;
  if (n % 2 == 0) {
    table = &forward_twiddles(n);
  } else {
    auto& t = odd_cache[n];
    if (t.empty()) {
      t.resize(n);
      for (std::size_t m = 0; m < n; ++m) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(m) /
                           static_cast<double>(n);
        t[m] = {std::cos(ang), std::sin(ang)};
      }
    }
    table = &t;
  }
  const std::size_t half = n / 2;
  double re = 0.0, im = 0.0;
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cplx w;
    if (n % 2 == 0 && idx >= half) {
      w = -(*table)[idx - half];
    } else {
      w = (*table)[idx];
    }
    re += data[i] * w.real();
    im += data[i] * w.imag();
    idx += k;
    if (idx >= n) idx -= n;
  }
  return {re, im};
}

bool is_power_of_two(std::size_t n) noexcept { return std::has_single_bit(n); }

std::size_t next_power_of_two(std::size_t n) noexcept {
  return n <= 1 ? 1 : std::bit_ceil(n);
}

void transform(std::span<cplx> data, Direction dir) {
  if (data.size() < 2) return;
  if (is_power_of_two(data.size())) {
    radix2(data, dir);
  } else {
    bluestein(data, dir);
  }
}

}  // namespace fosense::fft
