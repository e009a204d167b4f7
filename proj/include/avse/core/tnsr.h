#ifndef AVSE_CORE_TNSR_H_
#define AVSE_CORE_TNSR_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "avse/core/tensor.h"

namespace avse {

// "TNSR" binary tensor container:
//   magic "TNSR" | version u8 = 1 | dtype u8 = 0 (f32) | ndim u8 | pad u8 |
//   ndim x u32 LE dims | row-major f32 LE payload.
inline constexpr std::uint8_t kTnsrVersion = 1;
inline constexpr std::uint8_t kTnsrDtypeF32 = 0;

void WriteTnsr(std::ostream& os, const Tensor& t);
Tensor ReadTnsr(std::istream& is, const std::string& source = "<stream>");

void WriteTnsrFile(const std::filesystem::path& path, const Tensor& t);
Tensor ReadTnsrFile(const std::filesystem::path& path);

}  // namespace avse

#endif  // AVSE_CORE_TNSR_H_
