#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "wte/io.hpp"
#include "wte/signal.hpp"

namespace wte {

// Analysis prototype pair: lowpass h0 and its quadrature mirror h1.
struct FilterPair {
  std::vector<double> lowpass;
  std::vector<double> highpass;
};

// Daubechies 4-tap orthonormal pair. The highpass is the alternating-sign
// reversal of the lowpass, so |H0|^2 + |H1|^2 = 2 everywhere.
inline FilterPair daubechies_d4() {
  const double s3 = std::sqrt(3.0);
  const double n = 4.0 * std::sqrt(2.0);
  FilterPair fp;
  fp.lowpass = {(1.0 + s3) / n, (3.0 + s3) / n, (3.0 - s3) / n, (1.0 - s3) / n};
  fp.highpass.resize(4);
  for (std::size_t i = 0; i < 4; ++i) {
    const double v = fp.lowpass[3 - i];
    fp.highpass[i] = (i % 2 == 0) ? v : -v;
  }
  return fp;
}

// Equivalent one-shot filters of the undecimated filter bank. detail[j-1]
// realises level j (highpass at that scale preceded by the coarser lowpass
// cascade); approx realises the final lowpass branch. Each stage-k filter is
// the prototype upsampled by 2^k, and stages combine by plain convolution of
// the coefficient sequences.
struct IteratedFilters {
  int levels = 0;
  std::vector<std::vector<double>> detail;
  std::vector<double> approx;
  FilterPair prototype;
};

namespace detail {

inline std::vector<double> upsample(const std::vector<double>& h,
                                    std::size_t factor) {
  if (factor == 1) return h;
  std::vector<double> out((h.size() - 1) * factor + 1, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) out[i * factor] = h[i];
  return out;
}

inline std::vector<double> linear_convolve(const std::vector<double>& a,
                                           const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

// Circular convolution y[t] = sum_m f[m] x[(t - m) mod n]. The filter may be
// longer than the signal; indices just keep wrapping.
inline std::vector<double> circular_convolve(const std::vector<double>& x,
                                             const std::vector<double>& f) {
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    std::size_t idx = t;
    for (std::size_t m = 0; m < f.size(); ++m) {
      acc += f[m] * x[idx];
      idx = (idx == 0) ? n - 1 : idx - 1;
    }
    y[t] = acc;
  }
  return y;
}

// Circular correlation with a stride between taps; this is the synthesis
// primitive (time-reversed filtering) with the upsampled prototype applied
// without materialising its zeros.
inline std::vector<double> circular_correlate_strided(
    const std::vector<double>& x, const std::vector<double>& h,
    std::size_t stride) {
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i)
      acc += h[i] * x[(t + i * stride) % n];
    y[t] = acc;
  }
  return y;
}

inline std::vector<double> rotate_left(const std::vector<double>& x,
                                       std::size_t s) {
  const std::size_t n = x.size();
  s %= n;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[(i + s) % n];
  return y;
}

// Energy centroid of an impulse response, rounded to the nearest tap. These
// orthogonal filters are not linear-phase, so the midpoint overstates their
// delay badly; the centroid is the shift that actually lines the component
// up with the input time axis.
inline std::size_t energy_center(const std::vector<double>& f) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double e = f[i] * f[i];
    num += static_cast<double>(i) * e;
    den += e;
  }
  return den > 0.0 ? static_cast<std::size_t>(std::llround(num / den)) : 0;
}

}  // namespace detail

inline IteratedFilters build_iterated_filters(const FilterPair& fp,
                                              int levels) {
  if (levels < 1)
    throw std::invalid_argument("build_iterated_filters: levels must be >= 1");
  if (fp.lowpass.empty() || fp.lowpass.size() != fp.highpass.size())
    throw std::invalid_argument("build_iterated_filters: bad prototype pair");
  IteratedFilters out;
  out.levels = levels;
  out.prototype = fp;
  std::vector<double> cascade{1.0};
  std::size_t factor = 1;
  for (int j = 1; j <= levels; ++j) {
    out.detail.push_back(detail::linear_convolve(
        cascade, detail::upsample(fp.highpass, factor)));
    cascade =
        detail::linear_convolve(cascade, detail::upsample(fp.lowpass, factor));
    factor *= 2;
  }
  out.approx = cascade;
  return out;
}

// Nominal frequency support of each output channel, ordered to match the
// decomposition: detail level 1 (highest band) through level J, then the
// approximation. Bands that line up with the conventional EEG ranges get
// their conventional names; others get a "<lo>-<hi>Hz" label.
struct BandInfo {
  std::string label;
  double f_low = 0.0;
  double f_high = 0.0;
};

namespace detail {

inline std::string band_label(double lo, double hi) {
  struct Named {
    double lo, hi;
    const char* name;
  };
  static const Named named[] = {{0.0, 8.0, "delta_theta"},
                                {8.0, 16.0, "alpha"},
                                {16.0, 32.0, "beta"},
                                {32.0, 64.0, "low_gamma"},
                                {64.0, 128.0, "high_gamma"}};
  for (const auto& n : named)
    if (std::abs(lo - n.lo) < 1e-9 && std::abs(hi - n.hi) < 1e-9) return n.name;
  return format_double(lo) + "-" + format_double(hi) + "Hz";
}

}  // namespace detail

inline std::vector<BandInfo> band_map(double fs, int levels) {
  if (!(fs > 0.0)) throw std::invalid_argument("band_map: fs must be positive");
  if (levels < 1) throw std::invalid_argument("band_map: levels must be >= 1");
  std::vector<BandInfo> bands;
  double hi = fs / 2.0;
  for (int j = 1; j <= levels; ++j) {
    const double lo = hi / 2.0;
    bands.push_back({detail::band_label(lo, hi), lo, hi});
    hi = lo;
  }
  bands.push_back({detail::band_label(0.0, hi), 0.0, hi});
  return bands;
}

// Undecimated decomposition of one channel. Every component has the length
// of the input. alignment[c] is the circular left shift applied to centre
// component c (the equivalent filter's energy centroid); reconstruction
// undoes it exactly.
struct SubbandDecomposition {
  double fs = 0.0;
  int levels = 0;
  std::size_t n = 0;
  std::vector<TimeSeries> components;
  std::vector<BandInfo> bands;
  std::vector<std::size_t> alignment;

  const TimeSeries& component(const std::string& band_label) const {
    for (std::size_t i = 0; i < bands.size(); ++i)
      if (bands[i].label == band_label) return components[i];
    throw std::runtime_error("decomposition: no band named " + band_label);
  }
};

inline SubbandDecomposition swt_decompose(const TimeSeries& ts,
                                          const IteratedFilters& filters) {
  if (ts.samples.size() < 2)
    throw std::invalid_argument("swt_decompose: series too short");
  if (!(ts.fs > 0.0))
    throw std::invalid_argument("swt_decompose: fs must be positive");
  SubbandDecomposition dec;
  dec.fs = ts.fs;
  dec.levels = filters.levels;
  dec.n = ts.samples.size();
  dec.bands = band_map(ts.fs, filters.levels);

  auto add_component = [&](const std::vector<double>& filt,
                           const BandInfo& band) {
    auto raw = detail::circular_convolve(ts.samples, filt);
    const std::size_t shift = detail::energy_center(filt);
    TimeSeries comp;
    comp.fs = ts.fs;
    comp.label = ts.label.empty() ? band.label : ts.label + ":" + band.label;
    comp.samples = detail::rotate_left(raw, shift % dec.n);
    dec.components.push_back(std::move(comp));
    dec.alignment.push_back(shift % dec.n);
  };

  for (int j = 1; j <= filters.levels; ++j)
    add_component(filters.detail[static_cast<std::size_t>(j - 1)],
                  dec.bands[static_cast<std::size_t>(j - 1)]);
  add_component(filters.approx, dec.bands.back());
  return dec;
}

// Inverse of swt_decompose for the same prototype pair. Undoes the centring
// shifts, then runs the synthesis recursion: each stage applies the
// time-reversed prototypes with gain one half, which is exact because the
// pair is orthonormal.
inline TimeSeries swt_reconstruct(const SubbandDecomposition& dec,
                                  const FilterPair& fp) {
  if (dec.components.size() != static_cast<std::size_t>(dec.levels) + 1)
    throw std::invalid_argument("swt_reconstruct: component count mismatch");
  const std::size_t n = dec.n;
  auto unshift = [&](std::size_t c) {
    const std::size_t s = dec.alignment[c] % n;
    return detail::rotate_left(dec.components[c].samples, n - s);
  };

  std::vector<double> approx = unshift(static_cast<std::size_t>(dec.levels));
  for (int j = dec.levels; j >= 1; --j) {
    const std::vector<double> det = unshift(static_cast<std::size_t>(j - 1));
    const std::size_t stride = std::size_t{1} << (j - 1);
    const auto low = detail::circular_correlate_strided(approx, fp.lowpass, stride);
    const auto high = detail::circular_correlate_strided(det, fp.highpass, stride);
    for (std::size_t t = 0; t < n; ++t) approx[t] = 0.5 * (low[t] + high[t]);
  }
  TimeSeries out;
  out.fs = dec.fs;
  out.samples = std::move(approx);
  return out;
}

// Restriction of a decomposition to the named bands, in the given order.
inline SubbandDecomposition select_bands(const SubbandDecomposition& dec,
                                         const std::vector<std::string>& labels) {
  SubbandDecomposition out;
  out.fs = dec.fs;
  out.levels = dec.levels;
  out.n = dec.n;
  for (const auto& label : labels) {
    bool found = false;
    for (std::size_t i = 0; i < dec.bands.size(); ++i) {
      if (dec.bands[i].label == label) {
        out.components.push_back(dec.components[i]);
        out.bands.push_back(dec.bands[i]);
        out.alignment.push_back(dec.alignment[i]);
        found = true;
        break;
      }
    }
    if (!found)
      throw std::runtime_error("select_bands: no band named " + label);
  }
  return out;
}

// Mean square of each component; handy for routing diagnostics.
inline std::vector<double> subband_energies(const SubbandDecomposition& dec) {
  std::vector<double> out;
  out.reserve(dec.components.size());
  for (const auto& c : dec.components) out.push_back(signal_power(c.samples));
  return out;
}

// Components as channels of one recording, for inspection on disk.
inline void save_decomposition(const std::filesystem::path& path,
                               const SubbandDecomposition& dec) {
  save_recording(path, RecordingFormat::csv, dec.components);
}

}  // namespace wte
