#include "avse/core/tnsr.h"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

namespace avse {

namespace {

void PutU32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b = {static_cast<char>(v & 0xff),
                           static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff),
                           static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t GetU32(std::istream& is, const std::string& source) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4))
    throw Error(source + ": truncated TNSR data");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void WriteTnsr(std::ostream& os, const Tensor& t) {
  if (t.rank() == 0 || t.rank() > 255)
    throw Error("TNSR: tensor rank must be in [1, 255]");
  os.write("TNSR", 4);
  const char header[4] = {static_cast<char>(kTnsrVersion),
                          static_cast<char>(kTnsrDtypeF32),
                          static_cast<char>(t.rank()), 0};
  os.write(header, 4);
  for (int d : t.dims()) PutU32(os, static_cast<std::uint32_t>(d));
  for (float v : t.values()) PutU32(os, std::bit_cast<std::uint32_t>(v));
  if (!os) throw Error("TNSR: write failed");
}

Tensor ReadTnsr(std::istream& is, const std::string& source) {
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "TNSR")
    throw Error(source + ": bad TNSR magic");
  unsigned char header[4];
  if (!is.read(reinterpret_cast<char*>(header), 4))
    throw Error(source + ": truncated TNSR header");
  if (header[0] != kTnsrVersion)
    throw Error(source + ": unsupported TNSR version " +
                std::to_string(header[0]));
  if (header[1] != kTnsrDtypeF32)
    throw Error(source + ": unsupported TNSR dtype " +
                std::to_string(header[1]));
  const int ndim = header[2];
  if (ndim == 0) throw Error(source + ": TNSR with zero dims");
  Dims dims(ndim);
  for (int i = 0; i < ndim; ++i) {
    std::uint32_t d = GetU32(is, source);
    if (d == 0 || d > 0x7fffffffu)
      throw Error(source + ": invalid TNSR dimension");
    dims[i] = static_cast<int>(d);
  }
  std::vector<float> data(NumElements(dims));
  for (float& v : data) v = std::bit_cast<float>(GetU32(is, source));
  return Tensor(std::move(dims), std::move(data));
}

void WriteTnsrFile(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  WriteTnsr(os, t);
}

Tensor ReadTnsrFile(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  return ReadTnsr(is, path.string());
}

}  // namespace avse
