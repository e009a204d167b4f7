#include "avse/visual/image.h"

#include <algorithm>
#include <cmath>

#include "avse/core/error.h"

namespace avse::visual {

std::pair<MouthImage, ImageStats> NormalizeImageWithStats(const MouthImage& img) {
  if (img.pixels.dims() != Dims{kMouthHeight, kMouthWidth, kMouthChannels})
    throw Error("mouth image must be 16x24x3, got " + img.pixels.ShapeString());
  const auto n = static_cast<double>(img.pixels.size());
  double sum = 0.0;
  for (float v : img.pixels.values()) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (float v : img.pixels.values()) ss += (v - mean) * (v - mean);
  const double std = std::max(std::sqrt(ss / n), kImageStdFloor);
  MouthImage out;
  out.normalized = true;
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.pixels[i] = static_cast<float>((img.pixels[i] - mean) / std);
  return {std::move(out), ImageStats{static_cast<float>(mean), static_cast<float>(std)}};
}

MouthImage NormalizeImage(const MouthImage& img) {
  return NormalizeImageWithStats(img).first;
}

MouthImage UnnormalizeImage(const Tensor& normalized_pixels,
                            const ImageStats& stats) {
  if (normalized_pixels.size() != static_cast<std::size_t>(kMouthPixels))
    throw Error("unnormalize: expected 1152 pixel values");
  MouthImage out;
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = std::clamp(normalized_pixels[i] * stats.std + stats.mean, 0.0f, 1.0f);
  return out;
}

Tensor VisualContext(const std::vector<MouthImage>& seq, int t) {
  if (seq.empty()) throw Error("visual context: empty frame sequence");
  const int n = static_cast<int>(seq.size());
  if (t < 0 || t >= n) throw Error("visual context: frame index out of range");
  Tensor out({kMouthHeight, kMouthWidth, kVisualStackChannels});
  for (int f = 0; f < kVisualContext; ++f) {
    const Tensor& src = seq[std::clamp(t + f - kVisualContext / 2, 0, n - 1)].pixels;
    for (int y = 0; y < kMouthHeight; ++y)
      for (int x = 0; x < kMouthWidth; ++x)
        for (int c = 0; c < kMouthChannels; ++c)
          out.at(y, x, f * kMouthChannels + c) = src.at(y, x, c);
  }
  return out;
}

int AlignStreams(int audio_frames, int video_frames) {
  return std::min(audio_frames, video_frames);
}

}  // namespace avse::visual
