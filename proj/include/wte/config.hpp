#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wte/baselines.hpp"
#include "wte/infotheory.hpp"
#include "wte/io.hpp"
#include "wte/simgen.hpp"
#include "wte/swt.hpp"

namespace wte {

// Raw configuration: sections of flat key=value pairs. Defaults, file
// contents and command-line overrides all merge into this map before the
// typed config is built, so every layer can override every key.
using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

inline ConfigMap default_config_map() {
  return {
      {"input",
       {{"path", ""},
        {"format", "csv"},
        {"fs", "1024"},
        {"channel_x", "0"},
        {"channel_y", "1"}}},
      {"preprocess", {{"notch_hz", "0"}, {"notch_bw", "2"}}},
      {"window", {{"win", "512"}, {"hop", "256"}, {"drop_last", "on"}}},
      {"wavelet", {{"levels", "6"}, {"filter", "d4"}}},
      {"bands", {{"use", "delta_theta,alpha,beta,low_gamma"}}},
      {"embedding",
       {{"base_delays", "delta_theta:8,alpha:4,beta:2,low_gamma:1"},
        {"scales", "4,1"},
        {"dim", "8"},
        {"u_ms", "25"}}},
      {"estimator",
       {{"k", "4"},
        {"jitter", "1e-10"},
        {"seed", "20240915"},
        {"brute_threshold", "512"}}},
      {"significance", {{"surrogates", "1000"}, {"level", "0.95"}}},
      {"baselines",
       {{"m_max", "40"}, {"criterion", "bic"}, {"gc_surrogates", "200"}}},
      {"cfc", {{"window", "0"}}},
      {"simulation",
       {{"kind", "am"},
        {"snr_db", "20,10,5,0"},
        {"trials", "10"},
        {"duration_s", "1"},
        {"fs", "1024"},
        {"dim", "6"},
        {"scale", "4"},
        {"u_samples", "10"}}},
      {"output",
       {{"dir", "out"},
        {"workers", "1"},
        {"heatmap_cell", "32"},
        {"timings", "off"}}},
  };
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline void set_key(ConfigMap& map, const ConfigMap& schema,
                    const std::string& section, const std::string& key,
                    const std::string& value, const std::string& where) {
  const auto sec = schema.find(section);
  if (sec == schema.end())
    throw std::runtime_error("config: unknown section [" + section + "] " +
                             where);
  if (sec->second.find(key) == sec->second.end())
    throw std::runtime_error("config: unknown key " + section + "." + key +
                             " " + where);
  map[section][key] = value;
}

inline long to_int(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (...) {
    throw std::runtime_error("config: " + what + " is not an integer: " + v);
  }
}

inline double to_double(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (...) {
    throw std::runtime_error("config: " + what + " is not a number: " + v);
  }
}

inline bool to_bool(const std::string& v, const std::string& what) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw std::runtime_error("config: " + what + " is not a boolean: " + v);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : v) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace detail

// Parses the flat sectioned key=value format. Unknown sections or keys are
// rejected so typos fail loudly.
inline ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  const ConfigMap schema = default_config_map();
  ConfigMap out;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where =
        "(" + path.filename().string() + ":" + std::to_string(line_no) + ")";
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::runtime_error("config: malformed section header " + where);
      section = detail::trim(t.substr(1, t.size() - 2));
      if (schema.find(section) == schema.end())
        throw std::runtime_error("config: unknown section [" + section + "] " +
                                 where);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected key = value " + where);
    if (section.empty())
      throw std::runtime_error("config: key outside any section " + where);
    detail::set_key(out, schema, section, detail::trim(t.substr(0, eq)),
                    detail::trim(t.substr(eq + 1)), where);
  }
  return out;
}

// Applies a "section.key=value" override string.
inline void apply_override(ConfigMap& map, const std::string& spec) {
  const auto eq = spec.find('=');
  const auto dot = spec.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw std::runtime_error("config: override must be section.key=value: " +
                             spec);
  detail::set_key(map, default_config_map(), detail::trim(spec.substr(0, dot)),
                  detail::trim(spec.substr(dot + 1, eq - dot - 1)),
                  detail::trim(spec.substr(eq + 1)), "(command line)");
}

inline ConfigMap merge_config(const ConfigMap& base, const ConfigMap& over) {
  ConfigMap out = base;
  for (const auto& [section, kv] : over)
    for (const auto& [key, value] : kv) out[section][key] = value;
  return out;
}

// Fully typed and validated configuration.
struct AnalysisConfig {
  // input
  std::string input_path;
  RecordingFormat format = RecordingFormat::csv;
  double fs = 1024.0;
  std::string channel_x = "0", channel_y = "1";
  // preprocess
  double notch_hz = 0.0, notch_bw = 2.0;
  // windows
  std::size_t win = 512, hop = 256;
  bool drop_last = true;
  // wavelet
  int levels = 6;
  std::string filter = "d4";
  std::vector<std::string> bands;
  // embedding
  std::map<std::string, int> base_delays;
  std::vector<int> scales;
  int dim = 8;
  double u_ms = 25.0;
  // estimator
  KnnParams knn;
  std::uint64_t seed = 0;
  // significance
  std::size_t n_surrogates = 1000;
  double level = 0.95;
  // baselines
  int m_max = 40;
  OrderCriterion criterion = OrderCriterion::bic;
  std::size_t gc_surrogates = 200;
  // cfc
  std::size_t cfc_window = 0;
  // simulation
  ModulationKind sim_kind = ModulationKind::am;
  std::vector<double> sim_snr_db;
  std::size_t sim_trials = 10;
  double sim_duration_s = 1.0;
  double sim_fs = 1024.0;
  int sim_dim = 6;
  int sim_scale = 4;
  int sim_u_samples = 10;
  // output
  std::string out_dir = "out";
  int workers = 1;
  std::size_t heatmap_cell = 32;
  bool timings = false;

  int u_samples() const {
    return static_cast<int>(std::lround(u_ms / 1000.0 * fs));
  }
};

inline AnalysisConfig build_config(const ConfigMap& raw_in) {
  const ConfigMap raw = merge_config(default_config_map(), raw_in);
  auto get = [&](const char* sec, const char* key) -> const std::string& {
    return raw.at(sec).at(key);
  };

  AnalysisConfig c;
  c.input_path = get("input", "path");
  const std::string fmt = get("input", "format");
  if (fmt == "csv")
    c.format = RecordingFormat::csv;
  else if (fmt == "raw_f64")
    c.format = RecordingFormat::raw_f64;
  else
    throw std::runtime_error("config: unknown input.format " + fmt);
  c.fs = detail::to_double(get("input", "fs"), "input.fs");
  c.channel_x = get("input", "channel_x");
  c.channel_y = get("input", "channel_y");

  c.notch_hz = detail::to_double(get("preprocess", "notch_hz"), "preprocess.notch_hz");
  c.notch_bw = detail::to_double(get("preprocess", "notch_bw"), "preprocess.notch_bw");

  c.win = static_cast<std::size_t>(detail::to_int(get("window", "win"), "window.win"));
  c.hop = static_cast<std::size_t>(detail::to_int(get("window", "hop"), "window.hop"));
  c.drop_last = detail::to_bool(get("window", "drop_last"), "window.drop_last");

  c.levels = static_cast<int>(detail::to_int(get("wavelet", "levels"), "wavelet.levels"));
  c.filter = get("wavelet", "filter");
  if (c.filter != "d4")
    throw std::runtime_error("config: unknown wavelet.filter " + c.filter);

  c.bands = detail::split_list(get("bands", "use"));
  if (c.bands.empty()) throw std::runtime_error("config: bands.use is empty");

  for (const auto& item : detail::split_list(get("embedding", "base_delays"))) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("config: base_delays entries must be band:delay");
    c.base_delays[detail::trim(item.substr(0, colon))] = static_cast<int>(
        detail::to_int(detail::trim(item.substr(colon + 1)), "base delay"));
  }
  for (const auto& s : detail::split_list(get("embedding", "scales")))
    c.scales.push_back(static_cast<int>(detail::to_int(s, "embedding.scales")));
  c.dim = static_cast<int>(detail::to_int(get("embedding", "dim"), "embedding.dim"));
  c.u_ms = detail::to_double(get("embedding", "u_ms"), "embedding.u_ms");

  c.knn.k = static_cast<int>(detail::to_int(get("estimator", "k"), "estimator.k"));
  c.knn.jitter_amplitude =
      detail::to_double(get("estimator", "jitter"), "estimator.jitter");
  c.knn.brute_threshold = static_cast<std::size_t>(detail::to_int(
      get("estimator", "brute_threshold"), "estimator.brute_threshold"));
  c.seed = static_cast<std::uint64_t>(
      detail::to_int(get("estimator", "seed"), "estimator.seed"));
  c.knn.validate();

  c.n_surrogates = static_cast<std::size_t>(detail::to_int(
      get("significance", "surrogates"), "significance.surrogates"));
  c.level = detail::to_double(get("significance", "level"), "significance.level");
  if (!(c.level > 0.0) || !(c.level < 1.0))
    throw std::runtime_error("config: significance.level outside (0,1)");

  c.m_max = static_cast<int>(detail::to_int(get("baselines", "m_max"), "baselines.m_max"));
  const std::string crit = get("baselines", "criterion");
  if (crit == "bic")
    c.criterion = OrderCriterion::bic;
  else if (crit == "aicc")
    c.criterion = OrderCriterion::aicc;
  else
    throw std::runtime_error("config: unknown baselines.criterion " + crit);
  c.gc_surrogates = static_cast<std::size_t>(detail::to_int(
      get("baselines", "gc_surrogates"), "baselines.gc_surrogates"));

  c.cfc_window = static_cast<std::size_t>(
      detail::to_int(get("cfc", "window"), "cfc.window"));

  const std::string kind = get("simulation", "kind");
  if (kind == "am")
    c.sim_kind = ModulationKind::am;
  else if (kind == "pm")
    c.sim_kind = ModulationKind::pm;
  else
    throw std::runtime_error("config: unknown simulation.kind " + kind);
  for (const auto& s : detail::split_list(get("simulation", "snr_db")))
    c.sim_snr_db.push_back(detail::to_double(s, "simulation.snr_db"));
  c.sim_trials = static_cast<std::size_t>(
      detail::to_int(get("simulation", "trials"), "simulation.trials"));
  c.sim_duration_s =
      detail::to_double(get("simulation", "duration_s"), "simulation.duration_s");
  c.sim_fs = detail::to_double(get("simulation", "fs"), "simulation.fs");
  c.sim_dim = static_cast<int>(
      detail::to_int(get("simulation", "dim"), "simulation.dim"));
  c.sim_scale = static_cast<int>(
      detail::to_int(get("simulation", "scale"), "simulation.scale"));
  c.sim_u_samples = static_cast<int>(
      detail::to_int(get("simulation", "u_samples"), "simulation.u_samples"));

  c.out_dir = get("output", "dir");
  c.workers = static_cast<int>(
      detail::to_int(get("output", "workers"), "output.workers"));
  c.heatmap_cell = static_cast<std::size_t>(detail::to_int(
      get("output", "heatmap_cell"), "output.heatmap_cell"));
  c.timings = detail::to_bool(get("output", "timings"), "output.timings");

  // every referenced band must exist for the configured rates and depths
  auto check_bands = [](const std::vector<std::string>& wanted, double fs,
                        int levels, const char* what) {
    const auto available = band_map(fs, levels);
    for (const auto& b : wanted) {
      const bool ok =
          std::any_of(available.begin(), available.end(),
                      [&](const BandInfo& info) { return info.label == b; });
      if (!ok)
        throw std::runtime_error(std::string("config: band ") + b +
                                 " does not exist for " + what);
    }
  };
  check_bands(c.bands, c.fs, c.levels, "the configured fs and levels");
  check_bands(c.bands, c.sim_fs, c.levels, "the simulation fs and levels");
  for (const auto& b : c.bands)
    if (c.base_delays.find(b) == c.base_delays.end())
      throw std::runtime_error("config: base_delays missing band " + b);
  delay_schedule(c.base_delays, 1);  // dyadic validation
  if (c.dim < 1 || c.sim_dim < 1)
    throw std::runtime_error("config: embedding dimensions must be >= 1");
  if (c.scales.empty()) throw std::runtime_error("config: no scales configured");
  return c;
}

// Snapshot for the run manifest: the effective key=value map minus the
// purely runtime knobs (output directory, worker count), which must not
// change result bytes.
inline nlohmann::json config_snapshot(const ConfigMap& raw_in) {
  const ConfigMap raw = merge_config(default_config_map(), raw_in);
  nlohmann::json j;
  for (const auto& [section, kv] : raw)
    for (const auto& [key, value] : kv) {
      if (section == "output" && (key == "dir" || key == "workers")) continue;
      j[section][key] = value;
    }
  return j;
}

}  // namespace wte
