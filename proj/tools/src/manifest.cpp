#include "manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "sticky/error.hpp"

namespace sticky::cli {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["params"] = m.params;
  j["argv"] = m.argv;
  j["seed"] = m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr);
  j["version"] = m.version;
  j["timestamp"] = m.timestamp;
  auto outs = nlohmann::json::array();
  for (const auto& o : m.outputs) {
    outs.push_back({{"path", o.path}, {"flag", o.flag}, {"sha256", o.sha256}});
  }
  j["outputs"] = outs;
  return j;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.params = j.value("params", nlohmann::json::object());
    m.argv = j.at("argv").get<std::vector<std::string>>();
    if (j.contains("seed") && !j["seed"].is_null()) m.seed = j["seed"].get<std::uint64_t>();
    m.version = j.value("version", "");
    m.timestamp = j.value("timestamp", "");
    for (const auto& o : j.at("outputs")) {
      m.outputs.push_back({o.at("path").get<std::string>(), o.at("flag").get<std::string>(),
                           o.at("sha256").get<std::string>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed manifest: ") + e.what());
  }
}

std::string manifest_path(const std::string& primary_output) {
  return primary_output + ".manifest.json";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace sticky::cli
