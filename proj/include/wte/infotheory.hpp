#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wte/common.hpp"
#include "wte/embedding.hpp"
#include "wte/io.hpp"
#include "wte/knn.hpp"
#include "wte/signal.hpp"
#include "wte/swt.hpp"

namespace wte {

// Settings of the nearest-neighbour estimators. The metric is always the
// max-norm. Jitter is a deterministic tie-breaker applied only when exact
// duplicate points are present; its amplitude is relative to each column's
// spread. brute_threshold switches the neighbour index to a plain scan for
// small inputs (both paths give identical results).
struct KnnParams {
  int k = 4;
  double jitter_amplitude = 1e-10;
  std::uint64_t jitter_seed = 0x3c6ef372fe94f82aull;
  std::size_t brute_threshold = 512;

  void validate() const {
    if (k < 1) throw std::invalid_argument("KnnParams: k must be >= 1");
    if (jitter_amplitude < 0.0)
      throw std::invalid_argument("KnnParams: jitter_amplitude must be >= 0");
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"estimator", "ksg1"},
                          {"metric", "max"},
                          {"k", k},
                          {"jitter_amplitude", jitter_amplitude},
                          {"jitter_seed", jitter_seed},
                          {"standardized", true}};
  }
};

namespace detail {

inline bool has_duplicate_rows(const Matrix& m) {
  std::vector<std::uint32_t> order(m.rows);
  std::iota(order.begin(), order.end(), 0u);
  auto cmp = [&](std::uint32_t a, std::uint32_t b) {
    const double* ra = m.row(a);
    const double* rb = m.row(b);
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (ra[c] < rb[c]) return true;
      if (ra[c] > rb[c]) return false;
    }
    return false;
  };
  std::sort(order.begin(), order.end(), cmp);
  for (std::size_t i = 1; i < m.rows; ++i) {
    const double* ra = m.row(order[i - 1]);
    const double* rb = m.row(order[i]);
    bool equal = true;
    for (std::size_t c = 0; c < m.cols; ++c)
      if (ra[c] != rb[c]) {
        equal = false;
        break;
      }
    if (equal) return true;
  }
  return false;
}

inline void apply_jitter(Matrix& m, double amplitude, std::uint64_t seed) {
  std::vector<double> scale(m.cols);
  for (std::size_t c = 0; c < m.cols; ++c) {
    double s = 0.0, ss = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      s += m.at(r, c);
      ss += m.at(r, c) * m.at(r, c);
    }
    const double mu = s / static_cast<double>(m.rows);
    const double var = ss / static_cast<double>(m.rows) - mu * mu;
    scale[c] = var > 0.0 ? std::sqrt(var) : std::max(1.0, std::abs(mu));
  }
  Rng rng(seed);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c)
      m.at(r, c) += amplitude * scale[c] * (2.0 * rng.uniform01() - 1.0);
}

// Jitters a copy when exact duplicate rows exist and jitter is enabled;
// otherwise returns the input untouched.
inline Matrix prepare_points(const Matrix& m, const KnnParams& p) {
  Matrix out = m;
  if (p.jitter_amplitude > 0.0 && has_duplicate_rows(out))
    apply_jitter(out, p.jitter_amplitude, p.jitter_seed);
  return out;
}

// KSG conditional MI over a prepared joint block laid out [x | z | y].
inline double ksg_cmi_core(const Matrix& joint, std::size_t dx, std::size_t dz,
                           std::size_t dy, const KnnParams& p) {
  const std::size_t n = joint.rows;
  if (n <= static_cast<std::size_t>(p.k))
    throw std::runtime_error("ksg_cmi: need more rows than k");
  const std::size_t w = joint.cols;
  const double* base = joint.data.data();
  MaxNormIndex full(base, n, w, 0, w, p.brute_threshold);
  MaxNormIndex xz(base, n, w, 0, dx + dz, p.brute_threshold);
  MaxNormIndex yz(base, n, w, dx, w, p.brute_threshold);
  std::unique_ptr<MaxNormIndex> zi;
  if (dz > 0)
    zi = std::make_unique<MaxNormIndex>(base, n, w, dx, dx + dz,
                                        p.brute_threshold);
  // one pass per structure keeps each tree hot in cache; the final
  // accumulation runs in row order, so the sum matches a fused loop exactly
  std::vector<double> eps(n);
  for (std::size_t i = 0; i < n; ++i) {
    eps[i] = full.kth_distance(i, p.k);
    if (!(eps[i] > 0.0))
      throw std::runtime_error(
          "ksg_cmi: zero k-th neighbor distance (duplicate points, jitter "
          "disabled)");
  }
  std::vector<std::uint32_t> nxz(n), nyz(n), nz(n, static_cast<std::uint32_t>(n - 1));
  for (std::size_t i = 0; i < n; ++i)
    nxz[i] = static_cast<std::uint32_t>(xz.count_within(i, eps[i]));
  for (std::size_t i = 0; i < n; ++i)
    nyz[i] = static_cast<std::uint32_t>(yz.count_within(i, eps[i]));
  if (dz > 0)
    for (std::size_t i = 0; i < n; ++i)
      nz[i] = static_cast<std::uint32_t>(zi->count_within(i, eps[i]));
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += digamma(static_cast<double>(nz[i] + 1)) -
           digamma(static_cast<double>(nxz[i] + 1)) -
           digamma(static_cast<double>(nyz[i] + 1));
  return digamma(static_cast<double>(p.k)) + acc / static_cast<double>(n);
}

}  // namespace detail

// Kozachenko-Leonenko differential entropy in nats (max-norm, ball constant
// 2^D): H = psi(N) - psi(k) + D ln 2 + (D/N) sum_i ln eps_i.
inline double knn_entropy(const Matrix& points, const KnnParams& params) {
  params.validate();
  if (points.empty()) throw std::invalid_argument("knn_entropy: empty input");
  const std::size_t n = points.rows;
  if (n <= static_cast<std::size_t>(params.k))
    throw std::runtime_error("knn_entropy: need more rows than k");
  const Matrix pts = detail::prepare_points(points, params);
  MaxNormIndex index(pts.data.data(), n, pts.cols, 0, pts.cols,
                     params.brute_threshold);
  double log_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = index.kth_distance(i, params.k);
    if (!(eps > 0.0))
      throw std::runtime_error(
          "knn_entropy: zero k-th neighbor distance (duplicate points, jitter "
          "disabled)");
    log_sum += std::log(eps);
  }
  const auto d = static_cast<double>(pts.cols);
  return digamma(static_cast<double>(n)) -
         digamma(static_cast<double>(params.k)) + d * std::log(2.0) +
         d * log_sum / static_cast<double>(n);
}

// KSG conditional mutual information I(x; y | z) in nats. z may be empty
// (zero columns or zero rows), in which case this is the KSG mutual
// information. Estimates are reported raw and may be slightly negative.
inline double ksg_cmi(const Matrix& x, const Matrix& y, const Matrix& z,
                      const KnnParams& params) {
  params.validate();
  if (x.rows == 0 || x.cols == 0 || y.rows == 0 || y.cols == 0)
    throw std::invalid_argument("ksg_cmi: empty x or y");
  const std::size_t n = x.rows;
  const std::size_t dz = z.rows == 0 ? 0 : z.cols;
  if (y.rows != n || (dz > 0 && z.rows != n))
    throw std::invalid_argument("ksg_cmi: row misalignment");

  Matrix joint(n, x.cols + dz + y.cols);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = joint.data.data() + i * joint.cols;
    for (std::size_t c = 0; c < x.cols; ++c) row[c] = x.at(i, c);
    for (std::size_t c = 0; c < dz; ++c) row[x.cols + c] = z.at(i, c);
    for (std::size_t c = 0; c < y.cols; ++c) row[x.cols + dz + c] = y.at(i, c);
  }
  const Matrix prepared = detail::prepare_points(joint, params);
  return detail::ksg_cmi_core(prepared, x.cols, dz, y.cols, params);
}

// One transfer-entropy evaluation with its full parameter context.
struct TeResult {
  double value = 0.0;
  std::size_t n_samples = 0;
  KnnParams params;
  PairEmbedding embedding;
};

// TE over an aligned dataset: I(source past; target next | target past).
// The dataset layout already matches the estimator's [x | z | y] layout.
inline TeResult transfer_entropy(const TeDataset& ds, const KnnParams& params) {
  params.validate();
  if (ds.rows() <= static_cast<std::size_t>(params.k))
    throw std::runtime_error("transfer_entropy: need more rows than k");
  const Matrix prepared = detail::prepare_points(ds.joint, params);
  TeResult out;
  out.value = detail::ksg_cmi_core(
      prepared, static_cast<std::size_t>(ds.spec.dim_src),
      static_cast<std::size_t>(ds.spec.dim_dst), 1, params);
  out.n_samples = ds.rows();
  out.params = params;
  out.embedding = ds.spec;
  return out;
}

// Convenience path from raw series: both are variance-standardized before
// embedding (the max-norm mixes coordinates, so a common scale is required).
inline TeResult transfer_entropy(std::span<const double> src,
                                 std::span<const double> dst,
                                 const PairEmbedding& spec,
                                 const KnnParams& params) {
  const auto zs = zscored(src);
  const auto zd = zscored(dst);
  return transfer_entropy(build_te_dataset(zs, zd, spec), params);
}

// Directed TE between every band pair of two decompositions, with optional
// per-cell confidence limits attached by the significance machinery.
// values[r][c] is TE from source band c into destination band r.
struct TeMatrix {
  std::vector<std::string> src_bands;
  std::vector<std::string> dst_bands;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> cl95;
  std::map<std::string, int> schedule;
  int dim = 0;
  int delay = 0;
  KnnParams params;

  bool has_cl() const { return !cl95.empty(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["source_bands"] = src_bands;
    j["destination_bands"] = dst_bands;
    j["values"] = values;
    if (has_cl())
      j["cl95"] = cl95;
    else
      j["cl95"] = nullptr;
    j["parameters"] = {{"dim", dim},
                       {"delay_samples", delay},
                       {"schedule", schedule},
                       {"estimator", params.to_json()}};
    return j;
  }

  void save_csv(const std::filesystem::path& path) const {
    write_csv_matrix(path, "dst\\src", dst_bands, src_bands, values);
  }
};

// One directed band-pair TE between two decompositions. This is the exact
// per-cell computation used by te_matrix and by the surrogate calibration,
// so calibrated limits refer to precisely the production statistic.
inline TeResult band_pair_te(const SubbandDecomposition& src,
                             const SubbandDecomposition& dst,
                             const std::string& src_band,
                             const std::string& dst_band,
                             const std::map<std::string, int>& schedule,
                             int dim, int u, const KnnParams& params) {
  auto tau_of = [&](const std::string& band) {
    const auto it = schedule.find(band);
    if (it == schedule.end())
      throw std::runtime_error("band_pair_te: schedule missing band " + band);
    return it->second;
  };
  PairEmbedding spec;
  spec.tau_src = tau_of(src_band);
  spec.tau_dst = tau_of(dst_band);
  spec.dim_src = dim;
  spec.dim_dst = dim;
  spec.delay = u;
  return transfer_entropy(src.component(src_band).samples,
                          dst.component(dst_band).samples, spec, params);
}

inline TeMatrix te_matrix(const SubbandDecomposition& src,
                          const SubbandDecomposition& dst,
                          const std::map<std::string, int>& schedule, int dim,
                          int u, const KnnParams& params) {
  params.validate();
  if (src.n != dst.n)
    throw std::invalid_argument("te_matrix: decomposition length mismatch");
  if (src.bands.size() != dst.bands.size())
    throw std::invalid_argument("te_matrix: band set mismatch");
  auto tau_of = [&](const std::string& band) {
    const auto it = schedule.find(band);
    if (it == schedule.end())
      throw std::runtime_error("te_matrix: schedule missing band " + band);
    return it->second;
  };

  TeMatrix out;
  out.schedule = schedule;
  out.dim = dim;
  out.delay = u;
  out.params = params;
  for (const auto& b : src.bands) out.src_bands.push_back(b.label);
  for (const auto& b : dst.bands) out.dst_bands.push_back(b.label);

  // standardize every component once
  std::vector<std::vector<double>> zsrc, zdst;
  for (const auto& c : src.components) zsrc.push_back(zscored(c.samples));
  for (const auto& c : dst.components) zdst.push_back(zscored(c.samples));

  for (std::size_t r = 0; r < dst.bands.size(); ++r) {
    std::vector<double> row;
    for (std::size_t c = 0; c < src.bands.size(); ++c) {
      PairEmbedding spec;
      spec.tau_src = tau_of(src.bands[c].label);
      spec.tau_dst = tau_of(dst.bands[r].label);
      spec.dim_src = dim;
      spec.dim_dst = dim;
      spec.delay = u;
      row.push_back(
          transfer_entropy(build_te_dataset(zsrc[c], zdst[r], spec), params)
              .value);
    }
    out.values.push_back(std::move(row));
  }
  return out;
}

// TE as a function of the interaction delay over a grid; the argmax is the
// delay estimate, with ties resolved toward the smallest delay.
struct DelayScan {
  std::vector<int> grid;
  std::vector<double> te;
  int best_delay = 0;
  double best_te = 0.0;
};

inline DelayScan estimate_interaction_delay(std::span<const double> src,
                                            std::span<const double> dst,
                                            const PairEmbedding& base,
                                            const std::vector<int>& u_grid,
                                            const KnnParams& params) {
  if (u_grid.empty())
    throw std::invalid_argument("estimate_interaction_delay: empty grid");
  DelayScan out;
  out.grid = u_grid;
  std::sort(out.grid.begin(), out.grid.end());
  const auto zs = zscored(src);
  const auto zd = zscored(dst);
  double best = -std::numeric_limits<double>::infinity();
  for (int u : out.grid) {
    PairEmbedding spec = base;
    spec.delay = u;
    const double te =
        transfer_entropy(build_te_dataset(zs, zd, spec), params).value;
    out.te.push_back(te);
    if (te > best) {
      best = te;
      out.best_delay = u;
      out.best_te = te;
    }
  }
  return out;
}

}  // namespace wte
