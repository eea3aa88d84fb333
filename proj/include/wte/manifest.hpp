#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wte/digest.hpp"

namespace wte {

inline constexpr const char* kToolVersion = "0.1.0";

// Audit record written next to every batch run's outputs. Lists the
// effective configuration, the root seed, any warnings, and a digest of
// every produced file so runs can be compared byte for byte.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
  nlohmann::json timings;  // omitted from the manifest when null

  struct FileEntry {
    std::string path;  // relative to the output root, '/' separators
    std::string sha256;
    std::uint64_t bytes = 0;
  };
  std::vector<FileEntry> files;

  // Registers an already-written file; path is stored relative to root.
  void add_file(const std::filesystem::path& root,
                const std::filesystem::path& file) {
    FileEntry e;
    e.path = std::filesystem::relative(file, root).generic_string();
    e.sha256 = sha256_file(file);
    e.bytes = static_cast<std::uint64_t>(std::filesystem::file_size(file));
    files.push_back(std::move(e));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tool"] = "wte";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["warnings"] = warnings;
    if (!timings.is_null()) j["timings"] = timings;
    nlohmann::json files_json = nlohmann::json::array();
    std::vector<FileEntry> sorted = files;
    std::sort(sorted.begin(), sorted.end(),
              [](const FileEntry& a, const FileEntry& b) {
                return a.path < b.path;
              });
    for (const auto& f : sorted) {
      nlohmann::json e;
      e["path"] = f.path;
      e["sha256"] = f.sha256;
      e["bytes"] = f.bytes;
      files_json.push_back(e);
    }
    j["files"] = files_json;
    return j;
  }

  // Writes manifest.json into root. The manifest does not list itself.
  void save(const std::filesystem::path& root) const {
    const auto path = root / "manifest.json";
    std::ofstream out(path);
    if (!out)
      throw std::runtime_error("manifest: cannot write " + path.string());
    out << to_json().dump(2) << "\n";
    if (!out) throw std::runtime_error("manifest: write failed " + path.string());
  }
};

}  // namespace wte
