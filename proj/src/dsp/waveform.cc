#include "avse/dsp/waveform.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "avse/core/error.h"
#include "avse/dsp/resample.h"

namespace avse::dsp {

namespace {

std::uint32_t Le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t Le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void Put32(std::ofstream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void Put16(std::ofstream& os, std::uint16_t v) {
  os.put(static_cast<char>(v & 0xff));
  os.put(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

void Waveform::Validate() const {
  if (rate <= 0) throw Error("waveform rate must be positive");
  for (float s : samples)
    if (!std::isfinite(s)) throw NumericError("non-finite waveform sample");
}

double Power(const std::vector<float>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return acc / static_cast<double>(x.size());
}

Waveform ReadWav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (bytes.size() < 12 || std::string(bytes.begin(), bytes.begin() + 4) != "RIFF" ||
      std::string(bytes.begin() + 8, bytes.begin() + 12) != "WAVE")
    throw Error(name + ": not a RIFF/WAVE file");

  int channels = 0, rate = 0, bits = 0, format = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    std::string id(bytes.begin() + pos, bytes.begin() + pos + 4);
    std::size_t len = Le32(&bytes[pos + 4]);
    std::size_t body = pos + 8;
    if (body + len > bytes.size()) len = bytes.size() - body;
    if (id == "fmt ") {
      if (len < 16) throw Error(name + ": short fmt chunk");
      format = Le16(&bytes[body]);
      channels = Le16(&bytes[body + 2]);
      rate = static_cast<int>(Le32(&bytes[body + 4]));
      bits = Le16(&bytes[body + 14]);
    } else if (id == "data") {
      data = &bytes[body];
      data_len = len;
    }
    pos = body + len + (len & 1);
  }
  if (format != 1 || bits != 16)
    throw Error(name + ": only 16-bit PCM WAV is supported");
  if (channels < 1 || data == nullptr) throw Error(name + ": missing audio data");

  const std::size_t frame_bytes = 2 * static_cast<std::size_t>(channels);
  const std::size_t n = data_len / frame_bytes;
  Waveform w;
  w.rate = rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = static_cast<std::int16_t>(Le16(data + i * frame_bytes));
    w.samples[i] = static_cast<float>(v) / 32768.0f;
  }
  if (rate == 48000) {
    w.samples = ResamplePoly(w.samples, 1, 3);
    w.rate = kSampleRate;
  } else if (rate != kSampleRate) {
    throw Error(name + ": unsupported sample rate " + std::to_string(rate));
  }
  return w;
}

void WriteWav(const std::filesystem::path& path, const Waveform& w) {
  w.Validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  os.write("RIFF", 4);
  Put32(os, 36 + 2 * n);
  os.write("WAVEfmt ", 8);
  Put32(os, 16);
  Put16(os, 1);
  Put16(os, 1);
  Put32(os, static_cast<std::uint32_t>(w.rate));
  Put32(os, static_cast<std::uint32_t>(w.rate) * 2);
  Put16(os, 2);
  Put16(os, 16);
  os.write("data", 4);
  Put32(os, 2 * n);
  std::size_t clipped = 0;
  for (float s : w.samples) {
    if (s > 1.0f || s < -1.0f) ++clipped;
    float c = std::clamp(s, -1.0f, 1.0f);
    auto q = static_cast<std::int16_t>(std::lround(c * 32767.0f));
    Put16(os, static_cast<std::uint16_t>(q));
  }
  if (!os) throw Error("write failed: " + path.string());
  if (clipped)
    Warn(path.string() + ": clipped " + std::to_string(clipped) + " samples");
}

}  // namespace avse::dsp
