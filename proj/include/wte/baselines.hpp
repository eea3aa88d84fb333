#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wte/common.hpp"
#include "wte/fft.hpp"
#include "wte/io.hpp"
#include "wte/parallel.hpp"
#include "wte/signal.hpp"
#include "wte/significance.hpp"

namespace wte {

namespace detail {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Solves A X = B for symmetric positive definite A (n x n, row major) with
// q right-hand sides, via Cholesky. Throws when A is not positive definite.
inline std::vector<double> spd_solve(std::vector<double> a, std::size_t n,
                                     std::vector<double> b, std::size_t q) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0))
      throw std::runtime_error(
          "fit_var: singular regressor Gram matrix; try a smaller order");
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  // forward then backward substitution per right-hand side
  for (std::size_t c = 0; c < q; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i * q + c];
      for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k * q + c];
      b[i * q + c] = s / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = b[ii * q + c];
      for (std::size_t k = ii + 1; k < n; ++k) s -= a[k * n + ii] * b[k * q + c];
      b[ii * q + c] = s / a[ii * n + ii];
    }
  }
  return b;
}

inline std::vector<double> demeaned(std::span<const double> x) {
  const double m = mean(x);
  std::vector<double> out(x.begin(), x.end());
  for (auto& v : out) v -= m;
  return out;
}

}  // namespace detail

// Welch magnitude-squared coherence of two equal-length series, averaging
// raised-cosine tapered sub-segments.
struct CoherenceSpectrum {
  std::vector<double> freqs;
  std::vector<double> values;
  std::size_t n_segments = 0;
};

inline CoherenceSpectrum magnitude_squared_coherence(std::span<const double> x,
                                                     std::span<const double> y,
                                                     double fs,
                                                     std::size_t seg_len,
                                                     std::size_t hop) {
  if (x.size() != y.size())
    throw std::invalid_argument("coherence: length mismatch");
  if (seg_len < 2 || (seg_len & (seg_len - 1)) != 0)
    throw std::invalid_argument("coherence: segment length must be a power of two");
  if (hop == 0) throw std::invalid_argument("coherence: hop must be positive");
  if (x.size() < seg_len)
    throw std::invalid_argument("coherence: series shorter than a segment");
  const std::size_t n_seg = (x.size() - seg_len) / hop + 1;
  if (n_seg < 2)
    throw std::runtime_error("coherence: need at least 2 sub-segments");

  std::vector<double> taper(seg_len);
  for (std::size_t i = 0; i < seg_len; ++i)
    taper[i] = 0.5 * (1.0 - std::cos(2.0 * detail::kPi *
                                     static_cast<double>(i) /
                                     static_cast<double>(seg_len)));

  const std::size_t bins = seg_len / 2 + 1;
  std::vector<double> sxx(bins, 0.0), syy(bins, 0.0);
  std::vector<std::complex<double>> sxy(bins, {0.0, 0.0});
  std::vector<std::complex<double>> bx(seg_len), by(seg_len);
  for (std::size_t s = 0; s < n_seg; ++s) {
    const std::size_t off = s * hop;
    for (std::size_t i = 0; i < seg_len; ++i) {
      bx[i] = {x[off + i] * taper[i], 0.0};
      by[i] = {y[off + i] * taper[i], 0.0};
    }
    fft_inplace(bx, false);
    fft_inplace(by, false);
    for (std::size_t k = 0; k < bins; ++k) {
      sxx[k] += std::norm(bx[k]);
      syy[k] += std::norm(by[k]);
      sxy[k] += bx[k] * std::conj(by[k]);
    }
  }

  CoherenceSpectrum out;
  out.n_segments = n_seg;
  out.freqs.resize(bins);
  out.values.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out.freqs[k] = fs * static_cast<double>(k) / static_cast<double>(seg_len);
    const double denom = sxx[k] * syy[k];
    out.values[k] = denom > 0.0 ? std::norm(sxy[k]) / denom : 0.0;
  }
  return out;
}

// Time-resolved coherence: the outer windows slide by hop, and coherence is
// estimated inside each window by the averaged sub-segment estimator above
// (half-window sub-segments, 50% overlap).
struct CoherenceSpectrogram {
  std::vector<double> freqs;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // [window][bin]
  double cl95 = 0.0;
  std::size_t sub_segments = 0;
  std::size_t win = 0, hop = 0;

  // rows = frequency bins, columns = window centres
  void save_csv(const std::filesystem::path& path) const {
    std::vector<std::string> row_labels, col_labels;
    for (double f : freqs) row_labels.push_back(format_double(f));
    for (double t : times) col_labels.push_back(format_double(t));
    std::vector<std::vector<double>> rows(freqs.size(),
                                          std::vector<double>(times.size()));
    for (std::size_t w = 0; w < times.size(); ++w)
      for (std::size_t k = 0; k < freqs.size(); ++k) rows[k][w] = values[w][k];
    write_csv_matrix(path, "freq_hz\\time_s", row_labels, col_labels, rows);
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"window_samples", win},
                          {"hop_samples", hop},
                          {"sub_segments", sub_segments},
                          {"taper", "raised_cosine"},
                          {"cl95", cl95}};
  }
};

inline CoherenceSpectrogram coherence_spectrogram(const TimeSeries& x,
                                                  const TimeSeries& y,
                                                  std::size_t win,
                                                  std::size_t hop,
                                                  double level = 0.95) {
  if (x.samples.size() != y.samples.size())
    throw std::invalid_argument("coherence_spectrogram: length mismatch");
  if (x.samples.size() < win)
    throw std::invalid_argument("coherence_spectrogram: window exceeds series");
  const std::size_t sub_len = win / 2;
  const std::size_t sub_hop = sub_len / 2;
  if (sub_len < 2 || sub_hop == 0)
    throw std::invalid_argument("coherence_spectrogram: window too small");

  CoherenceSpectrogram out;
  out.win = win;
  out.hop = hop;
  const std::size_t n_win = (x.samples.size() - win) / hop + 1;
  for (std::size_t w = 0; w < n_win; ++w) {
    const std::size_t off = w * hop;
    const auto spec = magnitude_squared_coherence(
        std::span<const double>(x.samples).subspan(off, win),
        std::span<const double>(y.samples).subspan(off, win), x.fs, sub_len,
        sub_hop);
    if (w == 0) {
      out.freqs = spec.freqs;
      out.sub_segments = spec.n_segments;
      out.cl95 = coherence_cl(spec.n_segments, level);
    }
    out.values.push_back(spec.values);
    out.times.push_back((static_cast<double>(off) +
                         static_cast<double>(win) / 2.0) /
                        x.fs);
  }
  return out;
}

// Bivariate autoregressive model fitted by ordinary least squares.
// coeffs[l-1] holds lag-l coefficients row major: [a_xx a_xy; a_yx a_yy]
// where row x is the equation for x[t]. resid_cov likewise row major.
struct VarModel {
  int order = 0;
  std::size_t n_obs = 0;
  std::vector<std::array<double, 4>> coeffs;
  std::array<double, 4> resid_cov = {0.0, 0.0, 0.0, 0.0};
  bool stable = true;
  double spectral_radius = 0.0;
};

namespace detail {

// Spectral radius of the VAR companion matrix via normalised repeated
// squaring of the matrix (Frobenius norm); accurate to well below the
// stability tolerance that matters here.
inline double companion_spectral_radius(
    const std::vector<std::array<double, 4>>& coeffs) {
  const std::size_t m = coeffs.size();
  if (m == 0) return 0.0;
  const std::size_t n = 2 * m;
  std::vector<double> c(n * n, 0.0);
  for (std::size_t l = 0; l < m; ++l) {
    c[0 * n + 2 * l] = coeffs[l][0];
    c[0 * n + 2 * l + 1] = coeffs[l][1];
    c[1 * n + 2 * l] = coeffs[l][2];
    c[1 * n + 2 * l + 1] = coeffs[l][3];
  }
  for (std::size_t i = 2; i < n; ++i) c[i * n + (i - 2)] = 1.0;

  double log_scale = 0.0;
  std::vector<double> tmp(n * n);
  const int rounds = 14;
  for (int r = 0; r < rounds; ++r) {
    double nf = 0.0;
    for (double v : c) nf += v * v;
    nf = std::sqrt(nf);
    if (!(nf > 0.0)) return 0.0;
    for (auto& v : c) v /= nf;
    log_scale = 2.0 * (log_scale + std::log(nf));
    // tmp = c * c
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += c[i * n + k] * c[k * n + j];
        tmp[i * n + j] = s;
      }
    c.swap(tmp);
  }
  double nf = 0.0;
  for (double v : c) nf += v * v;
  nf = std::sqrt(nf);
  const double log_norm = log_scale + (nf > 0.0 ? std::log(nf) : -1e30);
  return std::exp(log_norm / std::pow(2.0, rounds));
}

// OLS fit of the bivariate system using observations t in [start, N).
// start >= m lets order selection share one effective sample across orders.
inline VarModel fit_var_window(std::span<const double> x,
                               std::span<const double> y, int m,
                               std::size_t start) {
  const std::size_t n = x.size();
  if (y.size() != n) throw std::invalid_argument("fit_var: length mismatch");
  if (m < 0) throw std::invalid_argument("fit_var: negative order");
  if (start < static_cast<std::size_t>(m)) start = static_cast<std::size_t>(m);
  if (n <= start + 2 * static_cast<std::size_t>(m) + 10)
    throw std::invalid_argument("fit_var: series too short for this order");
  const std::size_t rows = n - start;

  const auto dx = demeaned(x);
  const auto dy = demeaned(y);

  VarModel model;
  model.order = m;
  model.n_obs = rows;
  if (m == 0) {
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t t = start; t < n; ++t) {
      sxx += dx[t] * dx[t];
      sxy += dx[t] * dy[t];
      syy += dy[t] * dy[t];
    }
    model.resid_cov = {sxx / rows, sxy / rows, sxy / rows, syy / rows};
    model.spectral_radius = 0.0;
    model.stable = true;
    return model;
  }

  const auto p = static_cast<std::size_t>(2 * m);
  // gram = R'R, rhs = R'[x y]
  std::vector<double> gram(p * p, 0.0), rhs(p * 2, 0.0), reg(p);
  for (std::size_t t = start; t < n; ++t) {
    for (int l = 1; l <= m; ++l) {
      reg[static_cast<std::size_t>(2 * (l - 1))] = dx[t - static_cast<std::size_t>(l)];
      reg[static_cast<std::size_t>(2 * (l - 1) + 1)] = dy[t - static_cast<std::size_t>(l)];
    }
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i; j < p; ++j) gram[i * p + j] += reg[i] * reg[j];
      rhs[i * 2 + 0] += reg[i] * dx[t];
      rhs[i * 2 + 1] += reg[i] * dy[t];
    }
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) gram[i * p + j] = gram[j * p + i];

  const auto beta = spd_solve(gram, p, rhs, 2);

  model.coeffs.resize(static_cast<std::size_t>(m));
  for (int l = 1; l <= m; ++l) {
    const auto b = static_cast<std::size_t>(2 * (l - 1));
    model.coeffs[static_cast<std::size_t>(l - 1)] = {
        beta[b * 2 + 0], beta[(b + 1) * 2 + 0], beta[b * 2 + 1],
        beta[(b + 1) * 2 + 1]};
  }

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t t = start; t < n; ++t) {
    double px = 0.0, py = 0.0;
    for (int l = 1; l <= m; ++l) {
      const auto& a = model.coeffs[static_cast<std::size_t>(l - 1)];
      const double xl = dx[t - static_cast<std::size_t>(l)];
      const double yl = dy[t - static_cast<std::size_t>(l)];
      px += a[0] * xl + a[1] * yl;
      py += a[2] * xl + a[3] * yl;
    }
    const double ex = dx[t] - px;
    const double ey = dy[t] - py;
    sxx += ex * ex;
    sxy += ex * ey;
    syy += ey * ey;
  }
  model.resid_cov = {sxx / rows, sxy / rows, sxy / rows, syy / rows};
  model.spectral_radius = companion_spectral_radius(model.coeffs);
  model.stable = model.spectral_radius < 1.0;
  return model;
}

// Univariate AR residual variance (MLE) on observations t in [start, N).
inline double ar_resid_variance(std::span<const double> x, int m,
                                std::size_t start) {
  const std::size_t n = x.size();
  if (start < static_cast<std::size_t>(m)) start = static_cast<std::size_t>(m);
  if (n <= start + static_cast<std::size_t>(m) + 5)
    throw std::invalid_argument("ar fit: series too short for this order");
  const std::size_t rows = n - start;
  const auto dx = demeaned(x);
  if (m == 0) {
    double s = 0.0;
    for (std::size_t t = start; t < n; ++t) s += dx[t] * dx[t];
    return s / rows;
  }
  const auto p = static_cast<std::size_t>(m);
  std::vector<double> gram(p * p, 0.0), rhs(p, 0.0);
  for (std::size_t t = start; t < n; ++t) {
    for (std::size_t i = 0; i < p; ++i) {
      const double xi = dx[t - i - 1];
      for (std::size_t j = i; j < p; ++j) gram[i * p + j] += xi * dx[t - j - 1];
      rhs[i] += xi * dx[t];
    }
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) gram[i * p + j] = gram[j * p + i];
  const auto beta = spd_solve(gram, p, rhs, 1);
  double s = 0.0;
  for (std::size_t t = start; t < n; ++t) {
    double pred = 0.0;
    for (std::size_t i = 0; i < p; ++i) pred += beta[i] * dx[t - i - 1];
    const double e = dx[t] - pred;
    s += e * e;
  }
  return s / rows;
}

}  // namespace detail

inline VarModel fit_var(std::span<const double> x, std::span<const double> y,
                        int m) {
  return detail::fit_var_window(x, y, m, static_cast<std::size_t>(m));
}

enum class OrderCriterion { bic, aicc };

inline const char* criterion_name(OrderCriterion c) {
  return c == OrderCriterion::bic ? "bic" : "aicc";
}

// Order selection over m = 1..m_max on a common effective sample (all fits
// discard the first m_max observations). BIC and AICc use the MLE residual
// covariance; ties go to the smaller order.
struct OrderSelection {
  int order = 0;
  std::vector<double> criterion;  // value for m = index+1
};

inline OrderSelection select_order(std::span<const double> x,
                                   std::span<const double> y, int m_max,
                                   OrderCriterion criterion) {
  if (m_max < 1) throw std::invalid_argument("select_order: m_max must be >= 1");
  OrderSelection out;
  double best = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= m_max; ++m) {
    const auto model =
        detail::fit_var_window(x, y, m, static_cast<std::size_t>(m_max));
    const auto& s = model.resid_cov;
    const double det = s[0] * s[3] - s[1] * s[2];
    if (!(det > 0.0))
      throw std::runtime_error("select_order: degenerate residual covariance");
    const auto n_eff = static_cast<double>(model.n_obs);
    const double p = 4.0 * m;
    double value = std::log(det);
    if (criterion == OrderCriterion::bic) {
      value += std::log(n_eff) * p / n_eff;
    } else {
      if (n_eff - p - 1.0 <= 0.0)
        throw std::runtime_error("select_order: sample too small for AICc");
      value += 2.0 * p / n_eff + 2.0 * p * (p + 1.0) / (n_eff - p - 1.0);
    }
    out.criterion.push_back(value);
    if (value < best) {
      best = value;
      out.order = m;
    }
  }
  return out;
}

enum class GcDirection { x_to_y, y_to_x };

// Time-domain Granger causality F = ln(restricted/full residual variance of
// the target channel); both models are fitted on the same sample. Tiny
// negative values (floating-point residue of nested least squares) are
// clipped to zero and flagged.
struct GcValue {
  double value = 0.0;
  bool clipped = false;
};

inline GcValue gc_time_domain(std::span<const double> x,
                              std::span<const double> y, int m,
                              GcDirection direction) {
  if (m < 1) throw std::invalid_argument("gc_time_domain: order must be >= 1");
  const auto model = detail::fit_var_window(x, y, m, static_cast<std::size_t>(m));
  const bool to_y = direction == GcDirection::x_to_y;
  const double full_var = to_y ? model.resid_cov[3] : model.resid_cov[0];
  const double restricted_var = detail::ar_resid_variance(
      to_y ? y : x, m, static_cast<std::size_t>(m));
  if (!(full_var > 0.0) || !(restricted_var > 0.0))
    throw std::runtime_error("gc_time_domain: non-positive residual variance");
  GcValue out;
  out.value = std::log(restricted_var / full_var);
  if (out.value < 0.0) {
    if (out.value < -1e-9)
      throw std::runtime_error("gc_time_domain: negative beyond tolerance");
    out.value = 0.0;
    out.clipped = true;
  }
  return out;
}

// Geweke's frequency-domain GC evaluated on a grid of frequencies (Hz). The
// transfer matrix comes from the fitted VAR; the contribution removed from
// the target spectrum uses the partial source variance, which makes the
// expression invariant to the usual residual-decorrelation rotation.
inline std::vector<double> gc_spectrum(const VarModel& model,
                                       std::span<const double> freqs_hz,
                                       double fs, GcDirection direction) {
  if (!(fs > 0.0)) throw std::invalid_argument("gc_spectrum: fs must be positive");
  if (!model.stable)
    throw std::runtime_error("gc_spectrum: model is unstable (spectral radius " +
                             format_double(model.spectral_radius) + ")");
  const double sxx = model.resid_cov[0];
  const double sxy = model.resid_cov[1];
  const double syy = model.resid_cov[3];
  const bool to_y = direction == GcDirection::x_to_y;
  // partial variance of the source residual given the target residual
  const double src_partial =
      to_y ? sxx - sxy * sxy / syy : syy - sxy * sxy / sxx;
  if (!(src_partial > 0.0))
    throw std::runtime_error("gc_spectrum: degenerate residual covariance");

  std::vector<double> out;
  out.reserve(freqs_hz.size());
  for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
    const double w = 2.0 * detail::kPi * freqs_hz[i] / fs;
    std::complex<double> a00(1.0, 0.0), a01(0.0, 0.0), a10(0.0, 0.0),
        a11(1.0, 0.0);
    for (int l = 1; l <= model.order; ++l) {
      const std::complex<double> e(std::cos(w * l), -std::sin(w * l));
      const auto& c = model.coeffs[static_cast<std::size_t>(l - 1)];
      a00 -= c[0] * e;
      a01 -= c[1] * e;
      a10 -= c[2] * e;
      a11 -= c[3] * e;
    }
    const std::complex<double> det = a00 * a11 - a01 * a10;
    if (std::abs(det) < 1e-300)
      throw std::runtime_error("gc_spectrum: singular transfer matrix at index " +
                               std::to_string(i));
    // H = A^{-1}
    const std::complex<double> h00 = a11 / det, h01 = -a01 / det,
                               h10 = -a10 / det, h11 = a00 / det;
    double target_spec, cross_mag2;
    if (to_y) {
      target_spec = sxx * std::norm(h10) + syy * std::norm(h11) +
                    2.0 * sxy * (h10 * std::conj(h11)).real();
      cross_mag2 = std::norm(h10);
    } else {
      target_spec = syy * std::norm(h01) + sxx * std::norm(h00) +
                    2.0 * sxy * (h01 * std::conj(h00)).real();
      cross_mag2 = std::norm(h01);
    }
    const double intrinsic = target_spec - src_partial * cross_mag2;
    if (!(intrinsic > 0.0) || !(target_spec > 0.0))
      throw std::runtime_error(
          "gc_spectrum: non-positive intrinsic spectrum at frequency index " +
          std::to_string(i));
    out.push_back(std::log(target_spec / intrinsic));
  }
  return out;
}

// Per-window spectra used by both the production spectrogram and its
// surrogate confidence limits, so both run the identical pipeline.
struct GcWindowResult {
  int order = 0;
  std::vector<double> f_xy;
  std::vector<double> f_yx;
};

inline GcWindowResult gc_window_spectra(std::span<const double> xw,
                                        std::span<const double> yw, int m_max,
                                        OrderCriterion criterion,
                                        std::span<const double> freqs,
                                        double fs) {
  GcWindowResult out;
  out.order = select_order(xw, yw, m_max, criterion).order;
  const auto model = detail::fit_var_window(
      xw, yw, out.order, static_cast<std::size_t>(out.order));
  out.f_xy = gc_spectrum(model, freqs, fs, GcDirection::x_to_y);
  out.f_yx = gc_spectrum(model, freqs, fs, GcDirection::y_to_x);
  return out;
}

// Windowed frequency-domain GC in both directions. Windows that fail (order
// selection, fitting, instability) are masked with the failure reason rather
// than aborting the run. Cells of masked windows hold NaN.
struct GcSpectrogram {
  std::vector<double> freqs;
  std::vector<double> times;
  std::vector<std::vector<double>> values_xy;  // [window][bin]
  std::vector<std::vector<double>> values_yx;
  std::vector<std::string> mask;  // empty string = window OK
  std::vector<int> orders;        // selected order per window (0 if masked)
  std::vector<double> cl95_xy;    // per bin; empty until attached
  std::vector<double> cl95_yx;
  std::size_t win = 0, hop = 0;
  int m_max = 0;
  OrderCriterion criterion_kind = OrderCriterion::bic;
  std::string criterion;

  void save_csv(const std::filesystem::path& path, GcDirection dir) const {
    std::vector<std::string> row_labels, col_labels;
    for (double f : freqs) row_labels.push_back(format_double(f));
    for (double t : times) col_labels.push_back(format_double(t));
    const auto& vals = dir == GcDirection::x_to_y ? values_xy : values_yx;
    std::vector<std::vector<double>> rows(freqs.size(),
                                          std::vector<double>(times.size()));
    for (std::size_t w = 0; w < times.size(); ++w)
      for (std::size_t k = 0; k < freqs.size(); ++k) rows[k][w] = vals[w][k];
    write_csv_matrix(path, "freq_hz\\time_s", row_labels, col_labels, rows);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["window_samples"] = win;
    j["hop_samples"] = hop;
    j["order_criterion"] = criterion;
    j["orders"] = orders;
    nlohmann::json masked = nlohmann::json::array();
    for (std::size_t w = 0; w < mask.size(); ++w)
      if (!mask[w].empty())
        masked.push_back({{"window", w}, {"reason", mask[w]}});
    j["masked_windows"] = masked;
    j["model"] = "var_ols";  // least-squares AR; no moving-average part
    if (!cl95_xy.empty()) {
      j["cl95_xy"] = cl95_xy;
      j["cl95_yx"] = cl95_yx;
    }
    return j;
  }
};

inline GcSpectrogram gc_spectrogram(const TimeSeries& x, const TimeSeries& y,
                                    std::size_t win, std::size_t hop,
                                    int m_max, OrderCriterion criterion) {
  if (x.samples.size() != y.samples.size())
    throw std::invalid_argument("gc_spectrogram: length mismatch");
  if (x.samples.size() < win)
    throw std::invalid_argument("gc_spectrogram: window exceeds series");
  if (hop == 0) throw std::invalid_argument("gc_spectrogram: hop must be positive");

  GcSpectrogram out;
  out.win = win;
  out.hop = hop;
  out.m_max = m_max;
  out.criterion_kind = criterion;
  out.criterion = criterion_name(criterion);
  const std::size_t bins = win / 2 + 1;
  out.freqs.resize(bins);
  for (std::size_t k = 0; k < bins; ++k)
    out.freqs[k] = x.fs * static_cast<double>(k) / static_cast<double>(win);

  const std::size_t n_win = (x.samples.size() - win) / hop + 1;
  for (std::size_t w = 0; w < n_win; ++w) {
    const std::size_t off = w * hop;
    out.times.push_back(
        (static_cast<double>(off) + static_cast<double>(win) / 2.0) / x.fs);
    try {
      const auto res = gc_window_spectra(
          std::span<const double>(x.samples).subspan(off, win),
          std::span<const double>(y.samples).subspan(off, win), m_max,
          criterion, out.freqs, x.fs);
      out.values_xy.push_back(res.f_xy);
      out.values_yx.push_back(res.f_yx);
      out.orders.push_back(res.order);
      out.mask.emplace_back();
    } catch (const std::exception& e) {
      out.values_xy.emplace_back(bins, std::numeric_limits<double>::quiet_NaN());
      out.values_yx.emplace_back(bins, std::numeric_limits<double>::quiet_NaN());
      out.orders.push_back(0);
      out.mask.emplace_back(e.what());
    }
  }
  return out;
}

// Per-frequency surrogate confidence limits for the windowed GC, using the
// identical per-window pipeline on independent white Gaussian pairs. GC is
// scale invariant, so unit variances suffice.
inline void attach_gc_cls(GcSpectrogram& gram, double fs, std::size_t n,
                          std::uint64_t seed, double level = 0.95,
                          int workers = 1) {
  if (n < 100)
    throw std::invalid_argument("attach_gc_cls: need at least 100 surrogates");
  const std::size_t bins = gram.freqs.size();
  std::vector<std::vector<double>> all_xy(n), all_yx(n);
  std::vector<std::string> failures(n);
  parallel_for(n, workers, [&](std::size_t s) {
    Rng rng(derive_seed(seed, 2, s));
    std::vector<double> gx(gram.win), gy(gram.win);
    for (auto& v : gx) v = rng.gaussian();
    for (auto& v : gy) v = rng.gaussian();
    try {
      const auto res = gc_window_spectra(gx, gy, gram.m_max,
                                         gram.criterion_kind, gram.freqs, fs);
      all_xy[s] = res.f_xy;
      all_yx[s] = res.f_yx;
    } catch (const std::exception& e) {
      failures[s] = e.what();
    }
  });
  for (std::size_t s = 0; s < n; ++s)
    if (!failures[s].empty())
      throw std::runtime_error("attach_gc_cls: surrogate " + std::to_string(s) +
                               " failed: " + failures[s]);
  gram.cl95_xy.resize(bins);
  gram.cl95_yx.resize(bins);
  std::vector<double> tmp(n);
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t s = 0; s < n; ++s) tmp[s] = all_xy[s][k];
    std::sort(tmp.begin(), tmp.end());
    gram.cl95_xy[k] = percentile_sorted(tmp, level);
    for (std::size_t s = 0; s < n; ++s) tmp[s] = all_yx[s][k];
    std::sort(tmp.begin(), tmp.end());
    gram.cl95_yx[k] = percentile_sorted(tmp, level);
  }
}

}  // namespace wte
