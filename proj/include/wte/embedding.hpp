#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wte/common.hpp"
#include "wte/knn.hpp"

namespace wte {

// Full description of the multiscale embedding: per-band minimal delays, the
// common scale factor applied to them, the shared dimension, and the
// source-to-target interaction delay in samples.
struct EmbeddingSpec {
  std::map<std::string, int> base_delays;
  int scale = 1;
  int dim = 1;
  int interaction_delay = 0;

  void validate() const {
    if (dim < 1) throw std::invalid_argument("EmbeddingSpec: dim must be >= 1");
    if (scale < 1) throw std::invalid_argument("EmbeddingSpec: scale must be >= 1");
    if (interaction_delay < 0)
      throw std::invalid_argument("EmbeddingSpec: interaction_delay must be >= 0");
  }
};

// Per-pair embedding parameters (tau_x, d_x, tau_y, d_y, u).
struct PairEmbedding {
  int tau_src = 1;
  int dim_src = 1;
  int tau_dst = 1;
  int dim_dst = 1;
  int delay = 0;
};

// Scales the per-band minimal delays by s after checking the dyadic
// invariant: sorted by value, consecutive base delays halve exactly (each
// band's delay is twice the next-higher-frequency band's).
inline std::map<std::string, int> delay_schedule(
    const std::map<std::string, int>& base_delays, int s) {
  if (s < 1) throw std::invalid_argument("delay_schedule: scale must be >= 1");
  if (base_delays.empty())
    throw std::invalid_argument("delay_schedule: empty base delays");
  std::vector<int> values;
  for (const auto& [band, tau] : base_delays) {
    if (tau < 1)
      throw std::invalid_argument("delay_schedule: delay for " + band +
                                  " must be >= 1");
    values.push_back(tau);
  }
  std::sort(values.begin(), values.end(), std::greater<int>());
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    if (values[i] != 2 * values[i + 1])
      throw std::invalid_argument(
          "delay_schedule: base delays violate the dyadic relation");
  std::map<std::string, int> out;
  for (const auto& [band, tau] : base_delays) out[band] = s * tau;
  return out;
}

// Delay vector at time t: (x[t-(d-1)tau-1], ..., x[t-tau-1], x[t-1]),
// oldest first. Valid when the oldest index is >= 0 and t indexes the series.
inline std::vector<double> embed(std::span<const double> x, int tau, int d,
                                 std::size_t t) {
  if (tau < 1 || d < 1) throw std::invalid_argument("embed: bad parameters");
  if (t >= x.size()) throw std::invalid_argument("embed: t out of range");
  const long oldest = static_cast<long>(t) - static_cast<long>(d - 1) * tau - 1;
  if (oldest < 0) throw std::invalid_argument("embed: insufficient history");
  std::vector<double> v(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i)
    v[static_cast<std::size_t>(i)] =
        x[t - 1 - static_cast<std::size_t>(d - 1 - i) * static_cast<std::size_t>(tau)];
  return v;
}

// Aligned design matrix for one directed pair. The source past ends at
// x[t-1]; the target past is anchored to the predicted sample and ends at
// y[t+u-1]; the prediction target is y[t+u]. Rows enumerate every t for
// which all indices stay inside the series:
//   t in [max((d_x-1)tau_x + 1, (d_y-1)tau_y - u + 1), L-1-u].
// Stored as one row-major block [source_past | target_past | target_next]
// so the estimator's joint and marginal spaces are all contiguous column
// windows of the same array.
struct TeDataset {
  Matrix joint;  // width dim_src + dim_dst + 1
  PairEmbedding spec;

  std::size_t rows() const { return joint.rows; }
  double source_past(std::size_t i, int j) const {
    return joint.at(i, static_cast<std::size_t>(j));
  }
  double target_past(std::size_t i, int j) const {
    return joint.at(i, static_cast<std::size_t>(spec.dim_src + j));
  }
  double target_next(std::size_t i) const {
    return joint.at(i, static_cast<std::size_t>(spec.dim_src + spec.dim_dst));
  }
};

inline TeDataset build_te_dataset(std::span<const double> src,
                                  std::span<const double> dst,
                                  const PairEmbedding& spec) {
  if (src.size() != dst.size())
    throw std::invalid_argument("build_te_dataset: length mismatch");
  if (spec.tau_src < 1 || spec.tau_dst < 1 || spec.dim_src < 1 ||
      spec.dim_dst < 1 || spec.delay < 0)
    throw std::invalid_argument("build_te_dataset: bad embedding parameters");
  const long L = static_cast<long>(src.size());
  const long u = spec.delay;
  const long t_min =
      std::max(static_cast<long>(spec.dim_src - 1) * spec.tau_src + 1,
               static_cast<long>(spec.dim_dst - 1) * spec.tau_dst - u + 1);
  const long t_max = L - 1 - u;
  if (t_max < t_min)
    throw std::runtime_error("build_te_dataset: series too short for embedding");

  const auto n = static_cast<std::size_t>(t_max - t_min + 1);
  const auto width =
      static_cast<std::size_t>(spec.dim_src + spec.dim_dst + 1);
  TeDataset ds;
  ds.spec = spec;
  ds.joint = Matrix(n, width);
  for (long t = t_min; t <= t_max; ++t) {
    const auto i = static_cast<std::size_t>(t - t_min);
    double* row = ds.joint.data.data() + i * width;
    for (int j = 0; j < spec.dim_src; ++j)
      row[j] = src[static_cast<std::size_t>(
          t - 1 - static_cast<long>(spec.dim_src - 1 - j) * spec.tau_src)];
    for (int j = 0; j < spec.dim_dst; ++j)
      row[spec.dim_src + j] = dst[static_cast<std::size_t>(
          t + u - 1 - static_cast<long>(spec.dim_dst - 1 - j) * spec.tau_dst)];
    row[spec.dim_src + spec.dim_dst] =
        dst[static_cast<std::size_t>(t + u)];
  }
  return ds;
}

// Biased-normalised autocorrelation, acf[0] = 1.
inline std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
  if (x.size() < 2) throw std::invalid_argument("acf: too few samples");
  if (max_lag >= x.size())
    throw std::invalid_argument("acf: max_lag exceeds series length");
  const double m = mean(x);
  double denom = 0.0;
  for (double v : x) denom += (v - m) * (v - m);
  if (!(denom > 0.0)) throw std::runtime_error("acf: constant input");
  std::vector<double> out(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t t = lag; t < x.size(); ++t)
      acc += (x[t] - m) * (x[t - lag] - m);
    out[lag] = acc / denom;
  }
  return out;
}

// Index of the first non-positive value (sign change) in an ACF curve.
inline std::optional<std::size_t> acf_first_zero(
    std::span<const double> acf_values) {
  for (std::size_t lag = 1; lag < acf_values.size(); ++lag)
    if (acf_values[lag] <= 0.0) return lag;
  return std::nullopt;
}

namespace detail {

// Embedding block at dimension d for every t valid at dimension d_ref
// (d_ref >= d keeps row sets aligned across dimensions).
inline Matrix embedding_block(std::span<const double> x, int tau, int d,
                              int d_ref) {
  const long L = static_cast<long>(x.size());
  const long t_min = static_cast<long>(d_ref - 1) * tau + 1;
  const long t_max = L - 1;
  if (t_max < t_min)
    throw std::runtime_error("embedding: series too short for embedding");
  const auto n = static_cast<std::size_t>(t_max - t_min + 1);
  Matrix m(n, static_cast<std::size_t>(d));
  for (long t = t_min; t <= t_max; ++t) {
    const auto i = static_cast<std::size_t>(t - t_min);
    for (int j = 0; j < d; ++j)
      m.at(i, static_cast<std::size_t>(j)) = x[static_cast<std::size_t>(
          t - 1 - static_cast<long>(d - 1 - j) * tau)];
  }
  return m;
}

}  // namespace detail

// Cao's E1 curve. E(d) is the mean, over points valid at dimension d+1, of
// the ratio between the (d+1)-dimensional and d-dimensional max-norm
// distances to the d-dimensional nearest neighbour (zero-distance neighbours
// are skipped). E1(d) = E(d+1)/E(d), reported for d = 1..d_max-1 together
// with the smallest d from which |E1-1| < plateau_tol holds onward.
struct CaoResult {
  std::vector<double> e1;  // e1[i] corresponds to d = i+1
  std::optional<int> min_dim;
};

inline CaoResult cao_e1(std::span<const double> x, int tau, int d_max,
                        double plateau_tol = 0.05) {
  if (d_max < 2) throw std::invalid_argument("cao_e1: d_max must be >= 2");
  if (tau < 1) throw std::invalid_argument("cao_e1: tau must be >= 1");

  std::vector<double> e(static_cast<std::size_t>(d_max) + 1, 0.0);
  for (int d = 1; d <= d_max; ++d) {
    // rows valid at dimension d+1; columns hold the (d+1)-dim embedding and
    // the first d columns form the d-dim embedding of the same t.
    const Matrix block = detail::embedding_block(x, tau, d + 1, d + 1);
    const std::size_t n = block.rows;
    if (n < 2) throw std::runtime_error("cao_e1: series too short for d_max");
    MaxNormIndex index(block.data.data(), n, block.cols, 0,
                       static_cast<std::size_t>(d));
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
      // nearest neighbour in d dimensions with a strictly positive distance
      const auto nn = index.nearest(i, 1, 0.0);
      if (nn.empty()) continue;  // all other points coincide in d dims
      const std::size_t j = nn[0].id;
      double num = 0.0;
      for (int c = 0; c <= d; ++c) {
        const double diff = std::abs(block.at(i, static_cast<std::size_t>(c)) -
                                     block.at(j, static_cast<std::size_t>(c)));
        if (diff > num) num = diff;
      }
      acc += num / nn[0].dist;
      ++used;
    }
    if (used == 0) throw std::runtime_error("cao_e1: degenerate input");
    e[static_cast<std::size_t>(d)] = acc / static_cast<double>(used);
  }

  CaoResult out;
  for (int d = 1; d < d_max; ++d)
    out.e1.push_back(e[static_cast<std::size_t>(d + 1)] /
                     e[static_cast<std::size_t>(d)]);
  for (std::size_t i = 0; i < out.e1.size(); ++i) {
    bool plateau = true;
    for (std::size_t j = i; j < out.e1.size(); ++j)
      if (std::abs(out.e1[j] - 1.0) >= plateau_tol) {
        plateau = false;
        break;
      }
    if (plateau) {
      out.min_dim = static_cast<int>(i) + 1;
      break;
    }
  }
  return out;
}

// Local predictor error surface over a (tau, d) grid. For each cell the
// value x[t] is predicted as the mean successor of the k nearest embedding
// vectors; the surface holds the mean squared prediction error and the
// argmin is reported with ties broken toward smaller d, then smaller tau.
struct RagwitzResult {
  std::vector<int> taus;
  std::vector<int> dims;
  std::vector<std::vector<double>> mspe;  // [dim index][tau index]
  int best_tau = 0;
  int best_dim = 0;
  double best_mspe = 0.0;
};

inline RagwitzResult ragwitz_mspe(std::span<const double> x,
                                  const std::vector<int>& tau_grid,
                                  const std::vector<int>& d_grid, int k = 4) {
  if (tau_grid.empty() || d_grid.empty())
    throw std::invalid_argument("ragwitz_mspe: empty grid");
  if (k < 1) throw std::invalid_argument("ragwitz_mspe: k must be >= 1");
  RagwitzResult out;
  out.taus = tau_grid;
  out.dims = d_grid;
  std::sort(out.taus.begin(), out.taus.end());
  std::sort(out.dims.begin(), out.dims.end());

  double best = std::numeric_limits<double>::infinity();
  for (int d : out.dims) {
    std::vector<double> row;
    for (int tau : out.taus) {
      const Matrix block = detail::embedding_block(x, tau, d, d);
      const std::size_t n = block.rows;
      if (n < static_cast<std::size_t>(k) + 1)
        throw std::runtime_error("ragwitz_mspe: too few embedding vectors");
      MaxNormIndex index(block.data.data(), n, block.cols, 0, block.cols);
      const long t_min = static_cast<long>(d - 1) * tau + 1;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto nbrs = index.nearest(i, k);
        double pred = 0.0;
        for (const auto& nb : nbrs)
          pred += x[static_cast<std::size_t>(t_min) + nb.id];
        pred /= static_cast<double>(nbrs.size());
        const double truth = x[static_cast<std::size_t>(t_min) + i];
        acc += (truth - pred) * (truth - pred);
      }
      const double mspe = acc / static_cast<double>(n);
      row.push_back(mspe);
      if (mspe < best) {
        best = mspe;
        out.best_tau = tau;
        out.best_dim = d;
        out.best_mspe = mspe;
      }
    }
    out.mspe.push_back(std::move(row));
  }
  return out;
}

}  // namespace wte
