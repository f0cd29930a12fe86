#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sticky::cli {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::string& path);

struct OutputFile {
  std::string path;
  /// Flag that named the path, so a rerun can redirect it.
  std::string flag;
  std::string sha256;
};

struct RunManifest {
  std::string command;
  nlohmann::json params = nlohmann::json::object();
  /// Effective arguments after config-file expansion, subcommand first.
  std::vector<std::string> argv;
  std::optional<std::uint64_t> seed;
  std::string version;
  std::string timestamp;
  std::vector<OutputFile> outputs;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

/// "<primary output>.manifest.json".
std::string manifest_path(const std::string& primary_output);

/// UTC, ISO 8601 with seconds.
std::string utc_timestamp();

}  // namespace sticky::cli
