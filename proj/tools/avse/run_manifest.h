#ifndef AVSE_TOOLS_RUN_MANIFEST_H_
#define AVSE_TOOLS_RUN_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace avse::cli {

inline constexpr const char* kManifestName = "manifest.txt";

// Record of one command run, written as the last step into its output
// directory. Artifact checksums cover every other file below that directory.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::string output;
  std::string started;
  std::string finished;
  std::map<std::string, std::string> artifacts;  // relative path -> FNV-1a hex

  // Fills `artifacts` and `finished`, then writes <output>/manifest.txt.
  void Finalize();
  static RunManifest Read(const std::filesystem::path& dir);
};

std::string UtcTimestamp();

// Starts a manifest with the start time set.
RunManifest BeginRun(const std::string& command, std::uint64_t config_hash, std::uint64_t seed,
                     const std::vector<std::string>& inputs, const std::filesystem::path& output);

}  // namespace avse::cli

#endif  // AVSE_TOOLS_RUN_MANIFEST_H_
