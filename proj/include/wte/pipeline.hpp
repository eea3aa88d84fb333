#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wte/baselines.hpp"
#include "wte/config.hpp"
#include "wte/embedding.hpp"
#include "wte/heatmap.hpp"
#include "wte/infotheory.hpp"
#include "wte/manifest.hpp"
#include "wte/parallel.hpp"
#include "wte/significance.hpp"
#include "wte/simgen.hpp"
#include "wte/swt.hpp"

namespace wte {

// Wall-clock stage timing, collected only when requested; timing values are
// inherently run dependent, so they stay out of the manifest by default to
// keep output trees byte comparable.
struct StageTimer {
  bool enabled = false;
  nlohmann::json entries;

  template <typename F>
  void stage(const std::string& name, F&& fn) {
    if (!enabled) {
      fn();
      return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - t0;
    entries[name] = dt.count();
  }
};

namespace detail {

// Window start offsets. The windowed pipelines drop the final arithmetic
// window by convention (edge effects of the circular decomposition are
// worst there); drop_last=false keeps every full window.
inline std::vector<std::size_t> window_starts(std::size_t n, std::size_t win,
                                              std::size_t hop, bool drop_last) {
  if (win == 0 || hop == 0)
    throw std::invalid_argument("pipeline: window and hop must be positive");
  if (n < win)
    throw std::runtime_error("pipeline: series shorter than one window");
  std::size_t count = (n - win) / hop + 1;
  if (drop_last && count > 1) --count;
  std::vector<std::size_t> starts(count);
  for (std::size_t i = 0; i < count; ++i) starts[i] = i * hop;
  return starts;
}

inline TimeSeries slice(const TimeSeries& ts, std::size_t start,
                        std::size_t len) {
  if (start + len > ts.samples.size())
    throw std::invalid_argument("pipeline: slice outside series");
  TimeSeries out;
  out.fs = ts.fs;
  out.label = ts.label;
  out.samples.assign(
      ts.samples.begin() + static_cast<std::ptrdiff_t>(start),
      ts.samples.begin() + static_cast<std::ptrdiff_t>(start + len));
  return out;
}

// Channels are addressed by label first, then by zero-based index.
inline const TimeSeries& select_channel(const std::vector<TimeSeries>& rec,
                                        const std::string& sel) {
  for (const auto& ch : rec)
    if (ch.label == sel) return ch;
  const bool numeric =
      !sel.empty() && std::all_of(sel.begin(), sel.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
      });
  if (numeric) {
    const std::size_t idx = std::stoul(sel);
    if (idx < rec.size()) return rec[idx];
  }
  throw std::runtime_error("pipeline: no channel named " + sel);
}

inline std::filesystem::path ensure_outdir(const AnalysisConfig& cfg) {
  const std::filesystem::path root = cfg.out_dir;
  std::filesystem::create_directories(root);
  return root;
}

inline void check_failures(const std::vector<std::string>& failures,
                           const std::string& what) {
  for (std::size_t i = 0; i < failures.size(); ++i)
    if (!failures[i].empty())
      throw std::runtime_error("pipeline: " + what + " " + std::to_string(i) +
                               " failed: " + failures[i]);
}

// Registers a heatmap and its label sidecar in one go.
inline void add_heatmap(RunManifest& man, const std::filesystem::path& root,
                        const std::filesystem::path& image) {
  man.add_file(root, image);
  man.add_file(root, image.string() + ".labels.txt");
}

inline std::string two_digits(std::size_t v) {
  return v < 10 ? "0" + std::to_string(v) : std::to_string(v);
}

}  // namespace detail

struct InputPair {
  TimeSeries x, y;
};

// Loads the configured recording, picks the two channels and applies the
// optional notch prefilter.
inline InputPair load_input_pair(const AnalysisConfig& cfg) {
  if (cfg.input_path.empty())
    throw std::runtime_error("pipeline: input.path is not set");
  const auto rec = load_recording(cfg.input_path, cfg.format, cfg.fs);
  InputPair pair{detail::select_channel(rec, cfg.channel_x),
                 detail::select_channel(rec, cfg.channel_y)};
  if (pair.x.label == pair.y.label)
    pair.y.label += "'";
  if (cfg.notch_hz > 0.0) {
    pair.x = notch_filter(pair.x, cfg.notch_hz, cfg.notch_bw);
    pair.y = notch_filter(pair.y, cfg.notch_hz, cfg.notch_bw);
  }
  return pair;
}

// Same-band TE per analysis window, both directions, one scale at a time.
// Each scale gets its own diagonal surrogate calibration; cells above their
// band's limit are the significant ones in the rendered maps.
inline void run_intraband(const ConfigMap& raw) {
  const AnalysisConfig cfg = build_config(raw);
  StageTimer timer{cfg.timings};
  const auto root = detail::ensure_outdir(cfg);
  RunManifest man;
  man.command = "intraband";
  man.config = config_snapshot(raw);
  man.seed = cfg.seed;

  InputPair in;
  timer.stage("load", [&] { in = load_input_pair(cfg); });
  const auto filters = build_iterated_filters(daubechies_d4(), cfg.levels);
  const auto starts =
      detail::window_starts(in.x.size(), cfg.win, cfg.hop, cfg.drop_last);
  if (in.y.size() != in.x.size())
    throw std::runtime_error("pipeline: channel lengths differ");
  const int u = cfg.u_samples();
  const std::size_t nb = cfg.bands.size();
  const std::size_t nw = starts.size();

  std::vector<std::string> time_labels;
  std::vector<double> centers;
  for (const auto s : starts) {
    const double c =
        (static_cast<double>(s) + static_cast<double>(cfg.win) / 2.0) / cfg.fs;
    centers.push_back(c);
    time_labels.push_back(format_double(c));
  }

  for (const int scale : cfg.scales) {
    EmbeddingSpec espec;
    espec.base_delays = cfg.base_delays;
    espec.scale = scale;
    espec.dim = cfg.dim;
    espec.interaction_delay = u;
    const auto schedule = delay_schedule(cfg.base_delays, scale);
    const std::string tag = "scale" + std::to_string(scale);

    std::map<BandPair, SurrogateDistribution> cls;
    timer.stage("surrogates_" + tag, [&] {
      cls = per_band_cls(filters, diagonal_band_pairs(cfg.bands), espec,
                         cfg.knn, cfg.win, cfg.fs, 1.0, 1.0, cfg.n_surrogates,
                         derive_seed(cfg.seed, 10, static_cast<std::uint64_t>(scale)),
                         cfg.level, cfg.workers);
    });

    std::vector<std::vector<double>> te_xy(nb, std::vector<double>(nw, 0.0));
    std::vector<std::vector<double>> te_yx(nb, std::vector<double>(nw, 0.0));
    std::vector<std::string> failures(nw);
    timer.stage("windows_" + tag, [&] {
      parallel_for(nw, cfg.workers, [&](std::size_t w) {
        try {
          const auto xw = detail::slice(in.x, starts[w], cfg.win);
          const auto yw = detail::slice(in.y, starts[w], cfg.win);
          const auto dx = swt_decompose(xw, filters);
          const auto dy = swt_decompose(yw, filters);
          for (std::size_t b = 0; b < nb; ++b) {
            const auto& band = cfg.bands[b];
            te_xy[b][w] = band_pair_te(dx, dy, band, band, schedule, cfg.dim,
                                       u, cfg.knn)
                              .value;
            te_yx[b][w] = band_pair_te(dy, dx, band, band, schedule, cfg.dim,
                                       u, cfg.knn)
                              .value;
          }
        } catch (const std::exception& e) {
          failures[w] = e.what();
        }
      });
    });
    detail::check_failures(failures, "window");

    // per-band limits in band order
    std::vector<double> band_cl;
    for (const auto& b : cfg.bands) band_cl.push_back(cls.at({b, b}).cl95);

    auto emit_direction = [&](const std::string& dir,
                              const std::vector<std::vector<double>>& vals) {
      const auto csv = root / ("intraband_" + tag + "_" + dir + ".csv");
      write_csv_matrix(csv, "band\\time_s", cfg.bands, time_labels, vals);
      man.add_file(root, csv);

      std::vector<std::vector<bool>> sig(nb, std::vector<bool>(nw, false));
      for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t w = 0; w < nw; ++w)
          sig[b][w] = vals[b][w] > band_cl[b];
      HeatmapOptions opt;
      opt.cell_size = cfg.heatmap_cell;
      const auto ppm = root / ("intraband_" + tag + "_" + dir + ".ppm");
      render_heatmap(vals, &sig, cfg.bands, time_labels, ppm, opt);
      detail::add_heatmap(man, root, ppm);
    };
    emit_direction("xy", te_xy);
    emit_direction("yx", te_yx);

    nlohmann::json j;
    j["kind"] = "intraband";
    j["scale"] = scale;
    j["bands"] = cfg.bands;
    j["window_centers_s"] = centers;
    j["windows"] = {{"win", cfg.win},
                    {"hop", cfg.hop},
                    {"count", nw},
                    {"starts", starts}};
    j["values"] = {{"x_to_y", te_xy}, {"y_to_x", te_yx}};
    nlohmann::json jcl;
    for (std::size_t b = 0; b < nb; ++b) jcl[cfg.bands[b]] = band_cl[b];
    j["cl95"] = jcl;
    j["parameters"] = {{"dim", cfg.dim},
                       {"delay_samples", u},
                       {"schedule", schedule},
                       {"estimator", cfg.knn.to_json()},
                       {"surrogates", cfg.n_surrogates},
                       {"level", cfg.level}};
    j["channels"] = {{"x", in.x.label}, {"y", in.y.label}};
    const auto jpath = root / ("intraband_" + tag + ".json");
    {
      std::ofstream out(jpath);
      if (!out)
        throw std::runtime_error("pipeline: cannot write " + jpath.string());
      out << j.dump(2) << "\n";
    }
    man.add_file(root, jpath);

    std::vector<SurrogateDistribution> dists;
    for (const auto& b : cfg.bands) dists.push_back(cls.at({b, b}));
    const auto spath = root / ("surrogates_" + tag + ".csv");
    save_surrogates(spath, dists);
    man.add_file(root, spath);
  }

  man.timings = timer.entries;
  man.save(root);
}

// Full cross-band TE matrices at one selected window, per scale and per
// direction, with all-pair surrogate calibration and significance-masked
// heatmaps.
inline void run_cfc(const ConfigMap& raw) {
  const AnalysisConfig cfg = build_config(raw);
  StageTimer timer{cfg.timings};
  const auto root = detail::ensure_outdir(cfg);
  RunManifest man;
  man.command = "cfc";
  man.config = config_snapshot(raw);
  man.seed = cfg.seed;

  InputPair in;
  timer.stage("load", [&] { in = load_input_pair(cfg); });
  if (in.y.size() != in.x.size())
    throw std::runtime_error("pipeline: channel lengths differ");
  const auto filters = build_iterated_filters(daubechies_d4(), cfg.levels);
  const auto starts =
      detail::window_starts(in.x.size(), cfg.win, cfg.hop, cfg.drop_last);
  if (cfg.cfc_window >= starts.size())
    throw std::runtime_error(
        "pipeline: cfc.window out of range; recording has " +
        std::to_string(starts.size()) + " windows");
  const int u = cfg.u_samples();
  const std::size_t start = starts[cfg.cfc_window];

  const auto xw = detail::slice(in.x, start, cfg.win);
  const auto yw = detail::slice(in.y, start, cfg.win);
  const auto dec_x = select_bands(swt_decompose(xw, filters), cfg.bands);
  const auto dec_y = select_bands(swt_decompose(yw, filters), cfg.bands);

  for (const int scale : cfg.scales) {
    EmbeddingSpec espec;
    espec.base_delays = cfg.base_delays;
    espec.scale = scale;
    espec.dim = cfg.dim;
    espec.interaction_delay = u;
    const auto schedule = delay_schedule(cfg.base_delays, scale);
    const std::string tag = "scale" + std::to_string(scale);

    std::map<BandPair, SurrogateDistribution> cls;
    timer.stage("surrogates_" + tag, [&] {
      cls = per_band_cls(filters, all_band_pairs(cfg.bands), espec, cfg.knn,
                         cfg.win, cfg.fs, 1.0, 1.0, cfg.n_surrogates,
                         derive_seed(cfg.seed, 11, static_cast<std::uint64_t>(scale)),
                         cfg.level, cfg.workers);
    });

    TeMatrix m_xy, m_yx;
    timer.stage("te_" + tag, [&] {
      m_xy = te_matrix(dec_x, dec_y, schedule, cfg.dim, u, cfg.knn);
      m_yx = te_matrix(dec_y, dec_x, schedule, cfg.dim, u, cfg.knn);
    });
    attach_cls(m_xy, cls);
    attach_cls(m_yx, cls);

    auto emit = [&](const std::string& dir, const TeMatrix& m) {
      const auto csv = root / ("cfc_" + tag + "_" + dir + ".csv");
      m.save_csv(csv);
      man.add_file(root, csv);
      std::vector<std::vector<bool>> sig(m.values.size());
      for (std::size_t r = 0; r < m.values.size(); ++r)
        for (std::size_t c = 0; c < m.values[r].size(); ++c)
          sig[r].push_back(m.values[r][c] > m.cl95[r][c]);
      HeatmapOptions opt;
      opt.cell_size = cfg.heatmap_cell;
      const auto ppm = root / ("cfc_" + tag + "_" + dir + ".ppm");
      render_heatmap(m.values, &sig, m.dst_bands, m.src_bands, ppm, opt);
      detail::add_heatmap(man, root, ppm);
    };
    emit("xy", m_xy);
    emit("yx", m_yx);

    nlohmann::json j;
    j["kind"] = "cfc";
    j["scale"] = scale;
    j["window"] = {{"index", cfg.cfc_window},
                   {"start", start},
                   {"center_s", (static_cast<double>(start) +
                                 static_cast<double>(cfg.win) / 2.0) /
                                    cfg.fs}};
    j["x_to_y"] = m_xy.to_json();
    j["y_to_x"] = m_yx.to_json();
    j["channels"] = {{"x", in.x.label}, {"y", in.y.label}};
    j["surrogates"] = cfg.n_surrogates;
    j["level"] = cfg.level;
    const auto jpath = root / ("cfc_" + tag + ".json");
    {
      std::ofstream out(jpath);
      if (!out)
        throw std::runtime_error("pipeline: cannot write " + jpath.string());
      out << j.dump(2) << "\n";
    }
    man.add_file(root, jpath);

    std::vector<SurrogateDistribution> dists;
    for (const auto& dst : cfg.bands)
      for (const auto& src : cfg.bands) dists.push_back(cls.at({src, dst}));
    const auto spath = root / ("surrogates_cfc_" + tag + ".csv");
    save_surrogates(spath, dists);
    man.add_file(root, spath);
  }

  man.timings = timer.entries;
  man.save(root);
}

namespace detail {

// Spectrogram heatmap: rows are frequency bins, columns window centres.
// Masked (NaN) cells render as floor. Spectrograms have hundreds of rows, so
// the cell size is reduced relative to matrix heatmaps.
inline void emit_spectrogram_heatmap(RunManifest& man,
                                     const std::filesystem::path& root,
                                     const std::filesystem::path& path,
                                     const std::vector<double>& freqs,
                                     const std::vector<double>& times,
                                     const std::vector<std::vector<double>>& wb,
                                     const std::vector<double>& cl_per_bin,
                                     double cl_scalar, std::size_t cell) {
  const std::size_t bins = freqs.size();
  const std::size_t wins = times.size();
  std::vector<std::vector<double>> vals(bins, std::vector<double>(wins, 0.0));
  std::vector<std::vector<bool>> sig(bins, std::vector<bool>(wins, false));
  for (std::size_t w = 0; w < wins; ++w)
    for (std::size_t k = 0; k < bins; ++k) {
      const double v = wb[w][k];
      if (std::isfinite(v)) {
        vals[k][w] = v;
        const double cl = cl_per_bin.empty() ? cl_scalar : cl_per_bin[k];
        sig[k][w] = v > cl;
      }
    }
  std::vector<std::string> row_labels, col_labels;
  for (double f : freqs) row_labels.push_back(format_double(f));
  for (double t : times) col_labels.push_back(format_double(t));
  HeatmapOptions opt;
  opt.cell_size = cell;
  render_heatmap(vals, &sig, row_labels, col_labels, path, opt);
  add_heatmap(man, root, path);
}

}  // namespace detail

// Linear reference analyses on the same window grid as the TE pipelines:
// windowed magnitude-squared coherence with its closed-form limit, and
// windowed spectral GC in both directions with surrogate limits.
inline void run_baselines(const ConfigMap& raw) {
  const AnalysisConfig cfg = build_config(raw);
  StageTimer timer{cfg.timings};
  const auto root = detail::ensure_outdir(cfg);
  RunManifest man;
  man.command = "baselines";
  man.config = config_snapshot(raw);
  man.seed = cfg.seed;

  InputPair in;
  timer.stage("load", [&] { in = load_input_pair(cfg); });
  if (in.y.size() != in.x.size())
    throw std::runtime_error("pipeline: channel lengths differ");
  const auto starts =
      detail::window_starts(in.x.size(), cfg.win, cfg.hop, cfg.drop_last);
  const std::size_t keep = starts.back() + cfg.win;
  const auto xt = detail::slice(in.x, 0, keep);
  const auto yt = detail::slice(in.y, 0, keep);

  CoherenceSpectrogram cmc;
  timer.stage("coherence", [&] {
    cmc = coherence_spectrogram(xt, yt, cfg.win, cfg.hop, cfg.level);
  });
  GcSpectrogram gc;
  timer.stage("gc", [&] {
    gc = gc_spectrogram(xt, yt, cfg.win, cfg.hop, cfg.m_max, cfg.criterion);
  });
  timer.stage("gc_surrogates", [&] {
    attach_gc_cls(gc, cfg.fs, cfg.gc_surrogates, derive_seed(cfg.seed, 12),
                  cfg.level, cfg.workers);
  });
  for (std::size_t w = 0; w < gc.mask.size(); ++w)
    if (!gc.mask[w].empty())
      man.warnings.push_back("gc window " + std::to_string(w) +
                             " masked: " + gc.mask[w]);

  const auto cmc_csv = root / "coherence.csv";
  cmc.save_csv(cmc_csv);
  man.add_file(root, cmc_csv);
  const auto gc_xy_csv = root / "gc_xy.csv";
  gc.save_csv(gc_xy_csv, GcDirection::x_to_y);
  man.add_file(root, gc_xy_csv);
  const auto gc_yx_csv = root / "gc_yx.csv";
  gc.save_csv(gc_yx_csv, GcDirection::y_to_x);
  man.add_file(root, gc_yx_csv);

  const std::size_t cell = std::max<std::size_t>(2, cfg.heatmap_cell / 8);
  detail::emit_spectrogram_heatmap(man, root, root / "coherence.ppm", cmc.freqs,
                                   cmc.times, cmc.values, {}, cmc.cl95, cell);
  detail::emit_spectrogram_heatmap(man, root, root / "gc_xy.ppm", gc.freqs,
                                   gc.times, gc.values_xy, gc.cl95_xy, 0.0,
                                   cell);
  detail::emit_spectrogram_heatmap(man, root, root / "gc_yx.ppm", gc.freqs,
                                   gc.times, gc.values_yx, gc.cl95_yx, 0.0,
                                   cell);

  nlohmann::json j;
  j["kind"] = "baselines";
  j["coherence"] = cmc.to_json();
  j["gc"] = gc.to_json();
  j["channels"] = {{"x", in.x.label}, {"y", in.y.label}};
  j["gc_surrogates"] = cfg.gc_surrogates;
  j["level"] = cfg.level;
  if (cfg.notch_hz > 0.0)
    j["notch"] = {{"f0_hz", cfg.notch_hz}, {"bandwidth_hz", cfg.notch_bw}};
  const auto jpath = root / "baselines.json";
  {
    std::ofstream out(jpath);
    if (!out)
      throw std::runtime_error("pipeline: cannot write " + jpath.string());
    out << j.dump(2) << "\n";
  }
  man.add_file(root, jpath);

  man.timings = timer.entries;
  man.save(root);
}

// Synthetic-coupling detection study. Generates modulated trial pairs over
// the SNR grid, runs the full band-pair TE matrix per trial against one
// shared surrogate calibration (standardization makes the null independent
// of the trial's noise level), and tabulates detection of the true pair and
// the count of spurious cells.
inline void run_simulation_study(const ConfigMap& raw) {
  const AnalysisConfig cfg = build_config(raw);
  StageTimer timer{cfg.timings};
  const auto root = detail::ensure_outdir(cfg);
  std::filesystem::create_directories(root / "trials");
  RunManifest man;
  man.command = "simulate";
  man.config = config_snapshot(raw);
  man.seed = cfg.seed;

  const std::string true_src = "delta_theta";  // message band
  const std::string true_dst = "low_gamma";    // carrier band
  for (const auto& b : {true_src, true_dst})
    if (std::find(cfg.bands.begin(), cfg.bands.end(), b) == cfg.bands.end())
      throw std::runtime_error("pipeline: simulation needs band " + b);

  const auto filters = build_iterated_filters(daubechies_d4(), cfg.levels);
  const auto seg_len =
      static_cast<std::size_t>(std::lround(cfg.sim_fs * cfg.sim_duration_s));
  EmbeddingSpec espec;
  espec.base_delays = cfg.base_delays;
  espec.scale = cfg.sim_scale;
  espec.dim = cfg.sim_dim;
  espec.interaction_delay = cfg.sim_u_samples;
  const auto schedule = delay_schedule(cfg.base_delays, cfg.sim_scale);

  std::map<BandPair, SurrogateDistribution> cls;
  timer.stage("surrogates", [&] {
    cls = per_band_cls(filters, all_band_pairs(cfg.bands), espec, cfg.knn,
                       seg_len, cfg.sim_fs, 1.0, 1.0, cfg.n_surrogates,
                       derive_seed(cfg.seed, 13), cfg.level, cfg.workers);
  });

  std::vector<TrialPair> trials;
  timer.stage("generate", [&] {
    trials = gen_experiment(cfg.sim_kind, cfg.sim_snr_db, cfg.sim_trials,
                            cfg.sim_fs, cfg.sim_duration_s,
                            derive_seed(cfg.seed, 14));
  });

  std::vector<TeMatrix> mats(trials.size());
  std::vector<std::string> failures(trials.size());
  timer.stage("te", [&] {
    parallel_for(trials.size(), cfg.workers, [&](std::size_t t) {
      try {
        const auto dx =
            select_bands(swt_decompose(trials[t].x, filters), cfg.bands);
        const auto dy =
            select_bands(swt_decompose(trials[t].y, filters), cfg.bands);
        TeMatrix m = te_matrix(dx, dy, schedule, cfg.sim_dim,
                               cfg.sim_u_samples, cfg.knn);
        attach_cls(m, cls);
        mats[t] = std::move(m);
      } catch (const std::exception& e) {
        failures[t] = e.what();
      }
    });
  });
  detail::check_failures(failures, "trial");

  // aggregate per SNR; trials are laid out SNR-major by gen_experiment
  std::size_t true_r = 0, true_c = 0;
  {
    const auto& bands = cfg.bands;
    true_r = static_cast<std::size_t>(
        std::find(bands.begin(), bands.end(), true_dst) - bands.begin());
    true_c = static_cast<std::size_t>(
        std::find(bands.begin(), bands.end(), true_src) - bands.begin());
  }
  nlohmann::json per_trial = nlohmann::json::array();
  std::vector<std::vector<double>> table;
  std::vector<std::string> table_rows;
  for (std::size_t si = 0; si < cfg.sim_snr_db.size(); ++si) {
    std::size_t detections = 0, spurious_total = 0, spurious_max = 0;
    for (std::size_t ti = 0; ti < cfg.sim_trials; ++ti) {
      const std::size_t t = si * cfg.sim_trials + ti;
      const TeMatrix& m = mats[t];
      bool hit = false;
      std::size_t spurious = 0;
      for (std::size_t r = 0; r < m.values.size(); ++r)
        for (std::size_t c = 0; c < m.values[r].size(); ++c) {
          const bool sig = m.values[r][c] > m.cl95[r][c];
          if (!sig) continue;
          if (r == true_r && c == true_c)
            hit = true;
          else
            ++spurious;
        }
      detections += hit ? 1 : 0;
      spurious_total += spurious;
      spurious_max = std::max(spurious_max, spurious);
      per_trial.push_back({{"snr_db", trials[t].snr_db},
                           {"trial", ti},
                           {"seed", trials[t].clean.seed},
                           {"true_pair_detected", hit},
                           {"spurious_cells", spurious},
                           {"values", m.values}});

      // per-trial artifacts
      const std::string stem = std::string(modulation_name(cfg.sim_kind)) +
                               "_snr" + format_double(trials[t].snr_db) +
                               "_t" + detail::two_digits(ti);
      const auto csv = root / "trials" / (stem + ".csv");
      m.save_csv(csv);
      man.add_file(root, csv);
      std::vector<std::vector<bool>> sig(m.values.size());
      for (std::size_t r = 0; r < m.values.size(); ++r)
        for (std::size_t c = 0; c < m.values[r].size(); ++c)
          sig[r].push_back(m.values[r][c] > m.cl95[r][c]);
      HeatmapOptions opt;
      opt.cell_size = cfg.heatmap_cell;
      const auto ppm = root / "trials" / (stem + ".ppm");
      render_heatmap(m.values, &sig, m.dst_bands, m.src_bands, ppm, opt);
      detail::add_heatmap(man, root, ppm);
    }
    const double nt = static_cast<double>(cfg.sim_trials);
    table_rows.push_back(format_double(cfg.sim_snr_db[si]));
    table.push_back({static_cast<double>(cfg.sim_trials),
                     static_cast<double>(detections),
                     static_cast<double>(detections) / nt,
                     static_cast<double>(spurious_total) / nt,
                     static_cast<double>(spurious_max)});
  }

  const auto table_csv = root / "detection.csv";
  write_csv_matrix(table_csv, "snr_db",
                   table_rows,
                   {"trials", "true_detections", "detection_rate",
                    "mean_spurious", "max_spurious"},
                   table);
  man.add_file(root, table_csv);

  nlohmann::json j;
  j["kind"] = "simulate";
  j["modulation"] = modulation_name(cfg.sim_kind);
  j["true_pair"] = {{"source", true_src}, {"destination", true_dst}};
  j["bands"] = cfg.bands;
  j["parameters"] = {{"fs", cfg.sim_fs},
                     {"duration_s", cfg.sim_duration_s},
                     {"dim", cfg.sim_dim},
                     {"scale", cfg.sim_scale},
                     {"delay_samples", cfg.sim_u_samples},
                     {"schedule", schedule},
                     {"estimator", cfg.knn.to_json()},
                     {"surrogates", cfg.n_surrogates},
                     {"level", cfg.level}};
  j["trials"] = per_trial;
  const auto jpath = root / "detection.json";
  {
    std::ofstream out(jpath);
    if (!out)
      throw std::runtime_error("pipeline: cannot write " + jpath.string());
    out << j.dump(2) << "\n";
  }
  man.add_file(root, jpath);

  std::vector<SurrogateDistribution> dists;
  for (const auto& dst : cfg.bands)
    for (const auto& src : cfg.bands) dists.push_back(cls.at({src, dst}));
  const auto spath = root / "surrogates.csv";
  save_surrogates(spath, dists);
  man.add_file(root, spath);

  man.timings = timer.entries;
  man.save(root);
}

struct DiagnoseOptions {
  std::string channel;            // defaults to the configured x channel
  std::vector<int> taus{1, 2, 4, 8, 16, 32};
  std::vector<int> dims{2, 3, 4, 5, 6, 7, 8, 9, 10};
  int cao_max_dim = 12;
};

// Embedding diagnostics per analysis band of one channel: autocorrelation
// zero crossing for the delay, and the geometric and predictive dimension
// scans for the embedding dimension.
inline void run_diagnose(const ConfigMap& raw, const DiagnoseOptions& opt) {
  const AnalysisConfig cfg = build_config(raw);
  const auto root = detail::ensure_outdir(cfg);
  RunManifest man;
  man.command = "diagnose";
  man.config = config_snapshot(raw);
  man.seed = cfg.seed;

  if (cfg.input_path.empty())
    throw std::runtime_error("pipeline: input.path is not set");
  const auto rec = load_recording(cfg.input_path, cfg.format, cfg.fs);
  const std::string sel = opt.channel.empty() ? cfg.channel_x : opt.channel;
  TimeSeries ch = detail::select_channel(rec, sel);
  if (cfg.notch_hz > 0.0) ch = notch_filter(ch, cfg.notch_hz, cfg.notch_bw);

  const auto filters = build_iterated_filters(daubechies_d4(), cfg.levels);
  const auto dec = select_bands(swt_decompose(ch, filters), cfg.bands);

  nlohmann::json j;
  j["kind"] = "diagnose";
  j["channel"] = ch.label;
  nlohmann::json per_band;
  std::vector<std::vector<double>> delay_table;
  for (const auto& band : cfg.bands) {
    const auto z = zscored(dec.component(band).samples);
    const std::size_t max_lag = std::min<std::size_t>(z.size() / 4, 256);
    const auto a = acf(z, max_lag);
    const auto zero_lag = acf_first_zero(a);
    const int zero = zero_lag ? static_cast<int>(*zero_lag) : 0;

    const auto cao = cao_e1(z, zero > 0 ? zero : 1, opt.cao_max_dim);
    std::vector<std::vector<double>> cao_rows;
    std::vector<std::string> cao_labels;
    for (std::size_t i = 0; i < cao.e1.size(); ++i) {
      cao_labels.push_back(std::to_string(i + 1));
      cao_rows.push_back({cao.e1[i]});
    }
    const auto cao_csv = root / ("diagnose_cao_" + band + ".csv");
    write_csv_matrix(cao_csv, "dim", cao_labels, {"e1"}, cao_rows);
    man.add_file(root, cao_csv);

    const auto rag = ragwitz_mspe(z, opt.taus, opt.dims, cfg.knn.k);
    std::vector<std::string> rl, cl;
    for (int d : rag.dims) rl.push_back(std::to_string(d));
    for (int t : rag.taus) cl.push_back(std::to_string(t));
    const auto rag_csv = root / ("diagnose_ragwitz_" + band + ".csv");
    write_csv_matrix(rag_csv, "dim\\tau", rl, cl, rag.mspe);
    man.add_file(root, rag_csv);

    delay_table.push_back({static_cast<double>(zero)});
    nlohmann::json bj;
    bj["acf_first_zero"] = zero;
    if (cao.min_dim)
      bj["cao_min_dim"] = *cao.min_dim;
    else
      bj["cao_min_dim"] = nullptr;
    bj["ragwitz"] = {{"best_tau", rag.best_tau}, {"best_dim", rag.best_dim}};
    per_band[band] = bj;
  }
  const auto delays_csv = root / "diagnose_delays.csv";
  write_csv_matrix(delays_csv, "band", cfg.bands, {"acf_first_zero"},
                   delay_table);
  man.add_file(root, delays_csv);

  j["bands"] = per_band;
  const auto jpath = root / "diagnose.json";
  {
    std::ofstream out(jpath);
    if (!out)
      throw std::runtime_error("pipeline: cannot write " + jpath.string());
    out << j.dump(2) << "\n";
  }
  man.add_file(root, jpath);
  man.save(root);
}

}  // namespace wte
