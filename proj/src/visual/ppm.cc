#include "avse/visual/ppm.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "avse/core/error.h"

namespace avse::visual {

namespace {

void WriteNetpbm(const std::filesystem::path& path, const char* magic,
                 int height, int width, int channels, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << magic << '\n' << width << ' ' << height << "\n255\n";
  for (float v : t.values()) {
    auto q = static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    os.put(static_cast<char>(q));
  }
  (void)channels;
  if (!os) throw Error("write failed: " + path.string());
}

// Reads the whitespace/comment separated header token.
std::string NextToken(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok += static_cast<char>(c);
  }
  return tok;
}

Tensor ReadNetpbm(const std::filesystem::path& path, const std::string& magic,
                  int channels) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  if (NextToken(is) != magic) throw Error(path.string() + ": expected " + magic);
  int width = std::stoi(NextToken(is));
  int height = std::stoi(NextToken(is));
  int maxval = std::stoi(NextToken(is));
  if (maxval != 255) throw Error(path.string() + ": only maxval 255 is supported");
  Dims dims = channels == 1 ? Dims{height, width} : Dims{height, width, channels};
  Tensor t(dims);
  for (std::size_t i = 0; i < t.size(); ++i) {
    int c = is.get();
    if (c == EOF) throw Error(path.string() + ": truncated pixel data");
    t[i] = static_cast<float>(c) / 255.0f;
  }
  return t;
}

}  // namespace

void WritePpm(const std::filesystem::path& path, const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(2) != 3) throw Error("PPM expects H x W x 3");
  WriteNetpbm(path, "P6", rgb.dim(0), rgb.dim(1), 3, rgb);
}

Tensor ReadPpm(const std::filesystem::path& path) { return ReadNetpbm(path, "P6", 3); }

void WritePgm(const std::filesystem::path& path, const Tensor& gray) {
  if (gray.rank() != 2) throw Error("PGM expects H x W");
  WriteNetpbm(path, "P5", gray.dim(0), gray.dim(1), 1, gray);
}

Tensor ReadPgm(const std::filesystem::path& path) { return ReadNetpbm(path, "P5", 1); }

std::string FrameFileName(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05d.ppm", index);
  return buf;
}

void WriteFrameSequence(const std::filesystem::path& dir,
                        const std::vector<MouthImage>& frames) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < frames.size(); ++i)
    WritePpm(dir / FrameFileName(static_cast<int>(i)), frames[i].pixels);
}

std::vector<MouthImage> ReadFrameSequence(const std::filesystem::path& dir,
                                          int count) {
  std::vector<MouthImage> frames;
  for (int i = 0; count < 0 || i < count; ++i) {
    auto p = dir / FrameFileName(i);
    if (!std::filesystem::exists(p)) {
      if (count >= 0) throw Error("missing frame " + p.string());
      break;
    }
    MouthImage img;
    img.pixels = ReadPpm(p);
    if (img.pixels.dims() != Dims{kMouthHeight, kMouthWidth, kMouthChannels})
      throw Error(p.string() + ": mouth frames must be 24x16 pixels");
    frames.push_back(std::move(img));
  }
  return frames;
}

}  // namespace avse::visual
