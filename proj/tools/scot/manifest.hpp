#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace scot::cli {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Provenance written next to every command's outputs. `config_hash` covers
/// the command, inputs and resolved settings only, so reruns with the same
/// flags produce the same hash even though the timestamps differ.
struct RunManifest {
  std::string command;
  KeyValues config;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::string output_dir;
  std::string started;
  std::string finished;

  std::string config_hash() const;
  void write(const std::filesystem::path& file) const;
};

RunManifest read_manifest(const std::filesystem::path& file);

std::string utc_timestamp();

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& text);

}  // namespace scot::cli
