#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace wte {

// In-place radix-2 decimation-in-time FFT. Used by the spectral baselines;
// sizes there are small powers of two, so no other plan is needed.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0) throw std::invalid_argument("fft: empty input");
  if ((n & (n - 1)) != 0)
    throw std::invalid_argument("fft: length must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double pi = 3.14159265358979323846264338327950288;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= inv_n;
  }
}

inline std::vector<std::complex<double>> fft(
    const std::vector<std::complex<double>>& input) {
  auto a = input;
  fft_inplace(a, false);
  return a;
}

inline std::vector<std::complex<double>> ifft(
    const std::vector<std::complex<double>>& input) {
  auto a = input;
  fft_inplace(a, true);
  return a;
}

// Forward transform of a real signal; returns the full complex spectrum.
inline std::vector<std::complex<double>> fft_real(
    const std::vector<double>& x) {
  std::vector<std::complex<double>> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = {x[i], 0.0};
  fft_inplace(a, false);
  return a;
}

}  // namespace wte
