#pragma once

#include <map>
#include <string>
#include <vector>

namespace ndbench {

/// Reproducibility sidecar written next to every CLI artifact as
/// "<artifact>.manifest.json". Carries no timestamps so reruns with the same
/// inputs produce byte-identical manifests.
struct RunManifest {
  std::string command;                          // CLI verb
  std::string tool_version;                     // kVersion
  std::map<std::string, std::string> config;    // resolved settings, sorted by key
  std::map<std::string, std::string> inputs;    // input path -> md5 hex
  std::vector<std::string> outputs;             // artifact paths written by the run

  /// Hashes the file and records it under its path.
  void add_input(const std::string& path);
  void write_for(const std::string& artifact_path) const;
};

}  // namespace ndbench
