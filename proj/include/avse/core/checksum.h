#ifndef AVSE_CORE_CHECKSUM_H_
#define AVSE_CORE_CHECKSUM_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace avse {

// 64-bit FNV-1a. Used for config hashes and artifact checksums; not a
// cryptographic digest.
std::uint64_t Fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t FileChecksum(const std::filesystem::path& path);
std::string HexU64(std::uint64_t v);

}  // namespace avse

#endif  // AVSE_CORE_CHECKSUM_H_
