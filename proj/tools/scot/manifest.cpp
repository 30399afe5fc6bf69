#include "manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "scot/error.hpp"

namespace scot::cli {

using nlohmann::ordered_json;

#ifndef SCOT_GIT_DESCRIBE
#define SCOT_GIT_DESCRIBE "unknown"
#endif

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string RunManifest::config_hash() const {
  std::ostringstream canon;
  canon << "command=" << command << '\n';
  for (const auto& in : inputs) canon << "input=" << in << '\n';
  for (const auto& [k, v] : config) canon << k << '=' << v << '\n';
  return fnv1a_hex(canon.str());
}

void RunManifest::write(const std::filesystem::path& file) const {
  ordered_json j;
  j["command"] = command;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  j["config"] = cfg;
  j["config_hash"] = config_hash();
  j["seed"] = seed;
  j["inputs"] = inputs;
  j["output_dir"] = output_dir;
  j["git_describe"] = SCOT_GIT_DESCRIBE;
  j["started"] = started;
  j["finished"] = finished;
  std::ofstream out(file);
  if (!out) throw InputError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw NotFoundError("missing run manifest " + file.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file.string(), 0, e.what());
  }
  RunManifest m;
  m.command = j.value("command", "");
  for (const auto& [k, v] : j.at("config").items()) m.config.emplace_back(k, v.get<std::string>());
  m.seed = j.value("seed", std::uint64_t{0});
  m.inputs = j.value("inputs", std::vector<std::string>{});
  m.output_dir = j.value("output_dir", "");
  m.started = j.value("started", "");
  m.finished = j.value("finished", "");
  return m;
}

}  // namespace scot::cli
