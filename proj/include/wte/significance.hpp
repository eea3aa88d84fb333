#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wte/common.hpp"
#include "wte/embedding.hpp"
#include "wte/infotheory.hpp"
#include "wte/io.hpp"
#include "wte/parallel.hpp"
#include "wte/signal.hpp"
#include "wte/swt.hpp"

namespace wte {

// Linear-interpolation percentile of an ascending sequence: for fraction p
// the rank is p*(n-1) and the value interpolates between the bracketing
// order statistics.
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("percentile: empty values");
  if (!(p >= 0.0) || !(p <= 1.0))
    throw std::invalid_argument("percentile: p outside [0,1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Empirical null distribution of one statistic under independent Gaussian
// input pairs, with its upper confidence limit.
struct SurrogateDistribution {
  std::string statistic;
  std::vector<double> values;          // ascending
  std::vector<std::uint64_t> seeds;    // generator seed per sorted value
  std::size_t n = 0;
  double level = 0.95;
  double cl95 = 0.0;

  double percentile(double p) const { return percentile_sorted(values, p); }
};

using PairStatistic =
    std::function<double(const TimeSeries&, const TimeSeries&)>;

namespace detail {

inline TimeSeries gaussian_series(Rng& rng, std::size_t len, double fs,
                                  double variance, const std::string& label) {
  TimeSeries ts;
  ts.fs = fs;
  ts.label = label;
  ts.samples.resize(len);
  const double sd = std::sqrt(variance);
  for (auto& v : ts.samples) v = sd * rng.gaussian();
  return ts;
}

}  // namespace detail

// Evaluates the given statistic on n independent white Gaussian pairs with
// the stated variances and segment length, run through the identical
// pipeline closure as production data. Deterministic for a fixed seed and
// any worker count: surrogate s always uses derive_seed(seed, 1, s).
inline SurrogateDistribution surrogate_cl(const PairStatistic& statistic,
                                          double var_x, double var_y,
                                          std::size_t segment_len, double fs,
                                          std::size_t n, std::uint64_t seed,
                                          double level = 0.95, int workers = 1,
                                          const std::string& name = "te") {
  if (n < 100)
    throw std::invalid_argument("surrogate_cl: need at least 100 surrogates");
  if (!(var_x > 0.0) || !(var_y > 0.0))
    throw std::invalid_argument("surrogate_cl: variances must be positive");
  if (!(level > 0.0) || !(level < 1.0))
    throw std::invalid_argument("surrogate_cl: level outside (0,1)");

  std::vector<double> raw(n);
  std::vector<std::uint64_t> raw_seeds(n);
  std::vector<std::string> failures(n);
  parallel_for(n, workers, [&](std::size_t s) {
    const std::uint64_t task_seed = derive_seed(seed, 1, s);
    raw_seeds[s] = task_seed;
    Rng rng(task_seed);
    const TimeSeries x =
        detail::gaussian_series(rng, segment_len, fs, var_x, "surrogate_x");
    const TimeSeries y =
        detail::gaussian_series(rng, segment_len, fs, var_y, "surrogate_y");
    try {
      raw[s] = statistic(x, y);
    } catch (const std::exception& e) {
      failures[s] = e.what();
    }
  });
  for (std::size_t s = 0; s < n; ++s)
    if (!failures[s].empty())
      throw std::runtime_error("surrogate_cl: surrogate " + std::to_string(s) +
                               " failed: " + failures[s]);

  std::vector<std::pair<double, std::uint64_t>> order(n);
  for (std::size_t s = 0; s < n; ++s) order[s] = {raw[s], raw_seeds[s]};
  std::sort(order.begin(), order.end());

  SurrogateDistribution out;
  out.statistic = name;
  out.n = n;
  out.level = level;
  out.values.reserve(n);
  out.seeds.reserve(n);
  for (const auto& [v, s] : order) {
    out.values.push_back(v);
    out.seeds.push_back(s);
  }
  out.cl95 = percentile_sorted(out.values, level);
  return out;
}

// Closed-form CL for magnitude-squared coherence over L averaged segments:
// the null (1-alpha) quantile is 1 - (1-alpha)^(1/(L-1)).
inline double coherence_cl(std::size_t n_segments, double alpha) {
  if (n_segments < 2)
    throw std::invalid_argument("coherence_cl: need at least 2 segments");
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("coherence_cl: alpha outside (0,1)");
  return 1.0 -
         std::pow(1.0 - alpha,
                  1.0 / (static_cast<double>(n_segments) - 1.0));
}

using BandPair = std::pair<std::string, std::string>;  // (source, destination)

// One surrogate distribution per directed band pair. Each surrogate pair is
// decomposed once and the production band-pair TE routine runs on it, so the
// surrogate statistic is the production statistic by construction. Embedding
// delays differ per band, hence per-pair distributions.
inline std::map<BandPair, SurrogateDistribution> per_band_cls(
    const IteratedFilters& filters, const std::vector<BandPair>& pairs,
    const EmbeddingSpec& espec, const KnnParams& params,
    std::size_t segment_len, double fs, double var_x, double var_y,
    std::size_t n, std::uint64_t seed, double level = 0.95, int workers = 1) {
  if (n < 100)
    throw std::invalid_argument("per_band_cls: need at least 100 surrogates");
  espec.validate();
  const auto schedule = delay_schedule(espec.base_delays, espec.scale);
  if (pairs.empty()) throw std::invalid_argument("per_band_cls: no band pairs");
  std::vector<BandPair> cells = pairs;
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  const auto available = band_map(fs, filters.levels);
  for (const auto& [src, dst] : cells)
    for (const auto& label : {src, dst}) {
      const bool known = std::any_of(
          available.begin(), available.end(),
          [&](const BandInfo& b) { return b.label == label; });
      if (!known)
        throw std::invalid_argument("per_band_cls: unknown band " + label);
      if (schedule.find(label) == schedule.end())
        throw std::invalid_argument("per_band_cls: schedule missing band " +
                                    label);
    }

  // values indexed [cell][surrogate]
  std::vector<std::vector<double>> cell_values(cells.size(),
                                               std::vector<double>(n, 0.0));
  std::vector<std::uint64_t> raw_seeds(n);
  std::vector<std::string> failures(n);
  parallel_for(n, workers, [&](std::size_t s) {
    const std::uint64_t task_seed = derive_seed(seed, 1, s);
    raw_seeds[s] = task_seed;
    Rng rng(task_seed);
    const TimeSeries x =
        detail::gaussian_series(rng, segment_len, fs, var_x, "surrogate_x");
    const TimeSeries y =
        detail::gaussian_series(rng, segment_len, fs, var_y, "surrogate_y");
    try {
      const auto dec_x = swt_decompose(x, filters);
      const auto dec_y = swt_decompose(y, filters);
      for (std::size_t c = 0; c < cells.size(); ++c)
        cell_values[c][s] =
            band_pair_te(dec_x, dec_y, cells[c].first, cells[c].second,
                         schedule, espec.dim, espec.interaction_delay, params)
                .value;
    } catch (const std::exception& e) {
      failures[s] = e.what();
    }
  });
  for (std::size_t s = 0; s < n; ++s)
    if (!failures[s].empty())
      throw std::runtime_error("per_band_cls: surrogate " + std::to_string(s) +
                               " failed: " + failures[s]);

  std::map<BandPair, SurrogateDistribution> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<std::pair<double, std::uint64_t>> order(n);
    for (std::size_t s = 0; s < n; ++s)
      order[s] = {cell_values[c][s], raw_seeds[s]};
    std::sort(order.begin(), order.end());
    SurrogateDistribution dist;
    dist.statistic = "te:" + cells[c].first + "->" + cells[c].second;
    dist.n = n;
    dist.level = level;
    for (const auto& [v, sd] : order) {
      dist.values.push_back(v);
      dist.seeds.push_back(sd);
    }
    dist.cl95 = percentile_sorted(dist.values, level);
    out[cells[c]] = dist;
  }
  return out;
}

// All ordered pairs over one band list.
inline std::vector<BandPair> all_band_pairs(
    const std::vector<std::string>& bands) {
  std::vector<BandPair> out;
  for (const auto& dst : bands)
    for (const auto& src : bands) out.emplace_back(src, dst);
  return out;
}

// Diagonal pairs (same source and destination band).
inline std::vector<BandPair> diagonal_band_pairs(
    const std::vector<std::string>& bands) {
  std::vector<BandPair> out;
  for (const auto& b : bands) out.emplace_back(b, b);
  return out;
}

inline std::map<BandPair, SurrogateDistribution> per_band_cls(
    const IteratedFilters& filters, const std::vector<std::string>& bands,
    const EmbeddingSpec& espec, const KnnParams& params,
    std::size_t segment_len, double fs, double var_x, double var_y,
    std::size_t n, std::uint64_t seed, double level = 0.95, int workers = 1) {
  return per_band_cls(filters, all_band_pairs(bands), espec, params,
                      segment_len, fs, var_x, var_y, n, seed, level, workers);
}

// Copies the per-pair confidence limits into a TE matrix.
inline void attach_cls(TeMatrix& matrix,
                       const std::map<BandPair, SurrogateDistribution>& cls) {
  matrix.cl95.clear();
  for (const auto& dst : matrix.dst_bands) {
    std::vector<double> row;
    for (const auto& src : matrix.src_bands) {
      const auto it = cls.find({src, dst});
      if (it == cls.end())
        throw std::runtime_error("attach_cls: missing distribution for " +
                                 src + "->" + dst);
      row.push_back(it->second.cl95);
    }
    matrix.cl95.push_back(std::move(row));
  }
}

// Audit dump: one surrogate per row with the seed that generated it.
inline void save_surrogates(const std::filesystem::path& path,
                            const std::vector<SurrogateDistribution>& dists) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("save_surrogates: cannot open " + path.string());
  out << "statistic,index,seed,value\n";
  for (const auto& d : dists)
    for (std::size_t i = 0; i < d.values.size(); ++i)
      out << d.statistic << ',' << i << ',' << d.seeds[i] << ','
          << format_double(d.values[i]) << '\n';
  if (!out) throw std::runtime_error("save_surrogates: write failed");
}

}  // namespace wte
