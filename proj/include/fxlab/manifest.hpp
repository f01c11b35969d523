#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "fxlab/errors.hpp"
#include "fxlab/version.hpp"

namespace fxlab {

inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t seed = 14695981039346656037ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string hash_file(const std::filesystem::path& path) {
  return hash_hex(fnv1a64(read_text_file(path)));
}

// Identifies a completed run: what produced it and from which inputs.
// Deliberately carries no timestamps so identical runs are byte-identical.
struct RunManifest {
  std::string tool_name = kToolName;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  std::string config_fingerprint;             // hash of the canonical config JSON
  std::map<std::string, std::string> inputs;  // relative path -> content hash

  nlohmann::json to_json() const {
    return {{"tool_name", tool_name},
            {"tool_version", tool_version},
            {"seed", seed},
            {"config_fingerprint", config_fingerprint},
            {"inputs", inputs}};
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest out;
    out.tool_name = j.at("tool_name").get<std::string>();
    out.tool_version = j.at("tool_version").get<std::string>();
    out.seed = j.at("seed").get<std::uint64_t>();
    out.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    out.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    return out;
  }

  bool matches(const RunManifest& other) const {
    return tool_name == other.tool_name && tool_version == other.tool_version &&
           seed == other.seed && config_fingerprint == other.config_fingerprint &&
           inputs == other.inputs;
  }
};

inline void save_manifest(const RunManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << m.to_json().dump(2) << "\n";
}

inline RunManifest load_manifest(const std::filesystem::path& path) {
  try {
    return RunManifest::from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace fxlab
