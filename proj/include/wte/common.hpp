#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wte {

// Deterministic random generator built on the splitmix64 update. All
// randomness in the library flows through this type so that runs are
// bit-reproducible across platforms and thread counts (the standard
// <random> distributions are implementation-defined; these are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double sd) { return mean + sd * gaussian(); }

  // Rayleigh with the given scale parameter (inverse-CDF transform).
  double rayleigh(double sigma) {
    double u = uniform01();
    while (u >= 1.0) u = uniform01();
    return sigma * std::sqrt(-2.0 * std::log(1.0 - u));
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Seed-splitting rule used everywhere a task needs its own stream: mix the
// root seed with the stream and index through two splitmix rounds. Child
// streams never collide with the parent sequence.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  Rng mixer(root ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
  mixer.next_u64();
  Rng mixer2(mixer.next_u64() ^ (0xbf58476d1ce4e5b9ull * (index + 1)));
  mixer2.next_u64();
  return mixer2.next_u64();
}

// Digamma via the asymptotic series after shifting the argument above 6.
// Accurate to ~1e-12 for x > 0, which covers the integer arguments used by
// the nearest-neighbour estimators.
inline double digamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("digamma: requires x > 0");
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
  return result;
}

inline double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean: empty input");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Sample variance (N-1 denominator unless ddof = 0).
inline double variance(std::span<const double> x, int ddof = 1) {
  if (x.size() <= static_cast<std::size_t>(ddof))
    throw std::invalid_argument("variance: too few samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - ddof);
}

inline double stddev(std::span<const double> x, int ddof = 1) {
  return std::sqrt(variance(x, ddof));
}

// Mean of squares; the power reference for SNR computations.
inline double signal_power(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("signal_power: empty input");
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

inline double correlation(std::span<const double> x,
                          std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("correlation: size mismatch");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] - mx, b = y[i] - my;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace wte
