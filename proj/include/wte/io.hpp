#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "wte/signal.hpp"

namespace wte {

enum class RecordingFormat { csv, raw_f64 };

// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc())
    throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline double parse_double_cell(const std::string& cell, std::size_t row,
                                std::size_t col) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  // Tolerate surrounding blanks but nothing else.
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (*(last - 1) == ' ' || *(last - 1) == '\t' ||
                          *(last - 1) == '\r'))
    --last;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::runtime_error("load_recording: non-numeric cell at row " +
                             std::to_string(row) + ", column " +
                             std::to_string(col));
  if (!std::isfinite(value))
    throw std::runtime_error("load_recording: non-finite value at row " +
                             std::to_string(row) + ", column " +
                             std::to_string(col));
  return value;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace detail

// Loads a multichannel recording. CSV: one header line of channel labels,
// then one row per sample, one column per channel. raw_f64: little-endian
// doubles in channel-major order with a JSON sidecar at <path>.json holding
// the channel count, sample count and labels. The sampling rate is supplied
// by the caller in both formats.
inline std::vector<TimeSeries> load_recording(const std::filesystem::path& path,
                                              RecordingFormat format,
                                              double fs) {
  if (!(fs > 0.0))
    throw std::invalid_argument("load_recording: fs must be positive");
  if (format == RecordingFormat::csv) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_recording: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
      throw std::runtime_error("load_recording: empty file " + path.string());
    const auto labels = detail::split_csv_line(detail::strip_cr(line));
    const std::size_t cols = labels.size();
    std::vector<TimeSeries> out(cols);
    for (std::size_t c = 0; c < cols; ++c) {
      out[c].fs = fs;
      out[c].label = labels[c];
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
      line = detail::strip_cr(line);
      if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
      ++row;
      const auto cells = detail::split_csv_line(line);
      if (cells.size() != cols)
        throw std::runtime_error("load_recording: row " + std::to_string(row) +
                                 " has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(cols));
      for (std::size_t c = 0; c < cols; ++c)
        out[c].samples.push_back(parse_double_cell(cells[c], row, c + 1));
    }
    if (out.empty() || out[0].samples.empty())
      throw std::runtime_error("load_recording: no data rows in " + path.string());
    return out;
  }

  // raw_f64 with sidecar
  const std::filesystem::path sidecar = path.string() + ".json";
  std::ifstream meta(sidecar);
  if (!meta)
    throw std::runtime_error("load_recording: missing sidecar " + sidecar.string());
  nlohmann::json j;
  try {
    meta >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_recording: bad sidecar " + sidecar.string() +
                             ": " + e.what());
  }
  const std::size_t channels = j.at("channels").get<std::size_t>();
  const std::size_t samples = j.at("samples").get<std::size_t>();
  std::vector<std::string> labels;
  if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
  if (!labels.empty() && labels.size() != channels)
    throw std::runtime_error("load_recording: sidecar label count mismatch");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_recording: cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (bytes != channels * samples * sizeof(double))
    throw std::runtime_error("load_recording: file size does not match sidecar");
  std::vector<TimeSeries> out(channels);
  std::vector<double> buf(samples);
  for (std::size_t c = 0; c < channels; ++c) {
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(samples * sizeof(double)));
    if (!in) throw std::runtime_error("load_recording: short read");
    out[c].samples = buf;
    out[c].fs = fs;
    out[c].label = labels.empty() ? "ch" + std::to_string(c) : labels[c];
    for (std::size_t i = 0; i < samples; ++i)
      if (!std::isfinite(buf[i]))
        throw std::runtime_error("load_recording: non-finite value in channel " +
                                 out[c].label);
  }
  return out;
}

// Writes a recording in the given format; the inverse of load_recording.
inline void save_recording(const std::filesystem::path& path,
                           RecordingFormat format,
                           const std::vector<TimeSeries>& channels) {
  if (channels.empty())
    throw std::invalid_argument("save_recording: no channels");
  const std::size_t n = channels[0].samples.size();
  for (const auto& ch : channels)
    if (ch.samples.size() != n)
      throw std::invalid_argument("save_recording: channel length mismatch");

  if (format == RecordingFormat::csv) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_recording: cannot open " + path.string());
    for (std::size_t c = 0; c < channels.size(); ++c) {
      if (c) out << ',';
      out << channels[c].label;
    }
    out << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < channels.size(); ++c) {
        if (c) out << ',';
        out << format_double(channels[c].samples[i]);
      }
      out << '\n';
    }
    if (!out) throw std::runtime_error("save_recording: write failed");
    return;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_recording: cannot open " + path.string());
  for (const auto& ch : channels)
    out.write(reinterpret_cast<const char*>(ch.samples.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
  if (!out) throw std::runtime_error("save_recording: write failed");
  out.close();

  nlohmann::json j;
  j["channels"] = channels.size();
  j["samples"] = n;
  std::vector<std::string> labels;
  for (const auto& ch : channels) labels.push_back(ch.label);
  j["labels"] = labels;
  std::ofstream meta(path.string() + ".json");
  if (!meta) throw std::runtime_error("save_recording: cannot open sidecar");
  meta << j.dump(2) << '\n';
}

// Generic labelled matrix -> CSV, used for result tables. values is row
// major; the first column holds row labels.
inline void write_csv_matrix(const std::filesystem::path& path,
                             const std::string& corner,
                             const std::vector<std::string>& row_labels,
                             const std::vector<std::string>& col_labels,
                             const std::vector<std::vector<double>>& values) {
  if (values.size() != row_labels.size())
    throw std::invalid_argument("write_csv_matrix: row count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv_matrix: cannot open " + path.string());
  out << corner;
  for (const auto& c : col_labels) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (values[r].size() != col_labels.size())
      throw std::invalid_argument("write_csv_matrix: column count mismatch");
    out << row_labels[r];
    for (double v : values[r]) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_csv_matrix: write failed");
}

}  // namespace wte
