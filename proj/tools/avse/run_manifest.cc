#include "run_manifest.h"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "avse/core/checksum.h"
#include "avse/core/error.h"
#include "avse/core/kv_config.h"

namespace avse::cli {

namespace fs = std::filesystem;

std::string UtcTimestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

RunManifest BeginRun(const std::string& command, std::uint64_t config_hash, std::uint64_t seed,
                     const std::vector<std::string>& inputs, const fs::path& output) {
  RunManifest m;
  m.command = command;
  m.config_hash = HexU64(config_hash);
  m.seed = seed;
  m.inputs = inputs;
  m.output = output.string();
  m.started = UtcTimestamp();
  return m;
}

void RunManifest::Finalize() {
  const fs::path dir(output);
  if (!fs::is_directory(dir)) throw Error("manifest: no output directory " + output);
  artifacts.clear();
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir);
    if (rel == kManifestName) continue;
    artifacts[rel.generic_string()] = HexU64(FileChecksum(e.path()));
  }
  finished = UtcTimestamp();
  std::ofstream os(dir / kManifestName);
  os << "command=" << command << '\n'
     << "config_hash=" << config_hash << '\n'
     << "seed=" << seed << '\n';
  for (std::size_t i = 0; i < inputs.size(); ++i) os << "input." << i << '=' << inputs[i] << '\n';
  os << "output=" << output << '\n'
     << "started=" << started << '\n'
     << "finished=" << finished << '\n';
  for (const auto& [path, sum] : artifacts) os << "artifact." << path << '=' << sum << '\n';
  if (!os) throw Error("cannot write " + (dir / kManifestName).string());
}

RunManifest RunManifest::Read(const fs::path& dir) {
  KeyValueConfig kv = KeyValueConfig::ReadFile(dir / kManifestName);
  RunManifest m;
  m.command = kv.GetString("command", "");
  m.config_hash = kv.GetString("config_hash", "");
  m.seed = static_cast<std::uint64_t>(kv.GetInt("seed", 0));
  m.output = kv.GetString("output", "");
  m.started = kv.GetString("started", "");
  m.finished = kv.GetString("finished", "");
  for (const auto& [k, v] : kv.values()) {
    if (k.starts_with("artifact.")) m.artifacts[k.substr(9)] = v;
    if (k.starts_with("input.")) m.inputs.push_back(v);
  }
  return m;
}

}  // namespace avse::cli
