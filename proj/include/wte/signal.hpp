#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wte/common.hpp"

namespace wte {

// A uniformly sampled channel. fs is in Hz; label identifies the channel in
// reports and on disk.
struct TimeSeries {
  std::vector<double> samples;
  double fs = 0.0;
  std::string label;

  std::size_t size() const { return samples.size(); }
  double duration() const {
    return fs > 0.0 ? static_cast<double>(samples.size()) / fs : 0.0;
  }
};

// One analysis window cut from a parent series.
struct Segment {
  std::string parent;       // label of the source series
  std::size_t start = 0;    // sample offset of the window in the parent
  std::vector<double> samples;
};

// Sliding-window segmentation. Windows start at multiples of hop; a trailing
// remainder shorter than the window is dropped, giving
// floor((N - win) / hop) + 1 segments for N >= win and none otherwise.
inline std::vector<Segment> segment(const TimeSeries& ts, std::size_t win,
                                    std::size_t hop) {
  if (win == 0 || hop == 0)
    throw std::invalid_argument("segment: window and hop must be positive");
  std::vector<Segment> out;
  const std::size_t n = ts.samples.size();
  if (n < win) return out;
  const std::size_t count = (n - win) / hop + 1;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Segment seg;
    seg.parent = ts.label;
    seg.start = s * hop;
    seg.samples.assign(ts.samples.begin() + static_cast<std::ptrdiff_t>(seg.start),
                       ts.samples.begin() + static_cast<std::ptrdiff_t>(seg.start + win));
    out.push_back(std::move(seg));
  }
  return out;
}

namespace detail {

// One biquad pass, direct form II transposed.
inline void biquad_forward(std::span<const double> x, std::span<double> y,
                           double b0, double b1, double b2, double a1,
                           double a2) {
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const double out = b0 * v + s1;
    s1 = b1 * v - a1 * out + s2;
    s2 = b2 * v - a2 * out;
    y[i] = out;
  }
}

}  // namespace detail

// Second-order IIR notch at f0_hz with the stated rejection bandwidth. Zeros
// sit on the unit circle at the notch frequency, poles at radius
// r = 1 - pi * bw / fs on the same angle, and the gain is normalised to one
// at DC. The filter runs forward and backward for zero phase; the ends are
// extended by odd reflection before filtering so the transients stay out of
// the returned samples.
inline TimeSeries notch_filter(const TimeSeries& ts, double f0_hz,
                               double bandwidth_hz) {
  if (ts.fs <= 0.0) throw std::invalid_argument("notch_filter: fs must be positive");
  if (!(f0_hz > 0.0) || !(f0_hz < ts.fs / 2.0))
    throw std::invalid_argument("notch_filter: frequency outside (0, fs/2)");
  const double pi = 3.14159265358979323846264338327950288;
  const double r = 1.0 - pi * bandwidth_hz / ts.fs;
  if (!(r > 0.0) || !(r < 1.0))
    throw std::invalid_argument("notch_filter: bandwidth gives unstable pole radius");
  const std::size_t n = ts.samples.size();
  if (n < 2) throw std::invalid_argument("notch_filter: series too short");

  const double c = std::cos(2.0 * pi * f0_hz / ts.fs);
  // Normalise so the DC response (z = 1) is exactly one.
  const double g = (1.0 - 2.0 * r * c + r * r) / (2.0 - 2.0 * c);
  const double b0 = g, b1 = -2.0 * c * g, b2 = g;
  const double a1 = -2.0 * r * c, a2 = r * r;

  // Pad with odd reflections about each endpoint; six pole time constants is
  // enough for the startup transient to die out.
  const std::size_t want = static_cast<std::size_t>(
      std::ceil(6.0 * ts.fs / (pi * bandwidth_hz)));
  const std::size_t pad = std::min(n - 1, want);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i)
    ext.push_back(2.0 * ts.samples[0] - ts.samples[pad - i]);
  ext.insert(ext.end(), ts.samples.begin(), ts.samples.end());
  for (std::size_t i = 0; i < pad; ++i)
    ext.push_back(2.0 * ts.samples[n - 1] - ts.samples[n - 2 - i]);

  std::vector<double> tmp(ext.size());
  detail::biquad_forward(ext, tmp, b0, b1, b2, a1, a2);
  std::reverse(tmp.begin(), tmp.end());
  std::vector<double> back(tmp.size());
  detail::biquad_forward(tmp, back, b0, b1, b2, a1, a2);
  std::reverse(back.begin(), back.end());

  TimeSeries out;
  out.fs = ts.fs;
  out.label = ts.label;
  out.samples.assign(back.begin() + static_cast<std::ptrdiff_t>(pad),
                     back.begin() + static_cast<std::ptrdiff_t>(pad + n));
  return out;
}

// Adds white Gaussian noise scaled so that the ratio of signal power to
// noise power equals snr_db. Signal power is the mean square of the input.
inline TimeSeries add_noise_at_snr(const TimeSeries& ts, double snr_db,
                                   Rng& rng) {
  if (ts.samples.empty())
    throw std::invalid_argument("add_noise_at_snr: empty series");
  const double p_signal = signal_power(ts.samples);
  if (!(p_signal > 0.0))
    throw std::invalid_argument("add_noise_at_snr: signal has zero power");
  const double p_noise = p_signal / std::pow(10.0, snr_db / 10.0);
  const double sd = std::sqrt(p_noise);
  TimeSeries out = ts;
  for (auto& v : out.samples) v += sd * rng.gaussian();
  return out;
}

// Zero-mean unit-variance copy (population standard deviation).
inline std::vector<double> zscored(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("zscore: too few samples");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(x.size()));
  if (!(sd > 0.0)) throw std::runtime_error("zscore: constant signal");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) / sd;
  return out;
}

inline TimeSeries zscore(const TimeSeries& ts) {
  TimeSeries out = ts;
  out.samples = zscored(ts.samples);
  return out;
}

}  // namespace wte
