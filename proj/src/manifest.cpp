#include "ndbench/manifest.h"

#include <nlohmann/json.hpp>

#include "ndbench/hash.h"
#include "io_util.h"

namespace ndbench {

void RunManifest::add_input(const std::string& path) {
  inputs[path] = to_hex(md5_file(path));
}

void RunManifest::write_for(const std::string& artifact_path) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) j["config"][k] = v;
  j["inputs"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : inputs) j["inputs"][k] = v;
  j["outputs"] = outputs;
  detail::write_text_file(artifact_path + ".manifest.json", j.dump(2) + "\n");
}

}  // namespace ndbench
