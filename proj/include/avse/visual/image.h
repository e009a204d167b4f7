#ifndef AVSE_VISUAL_IMAGE_H_
#define AVSE_VISUAL_IMAGE_H_

#include <utility>
#include <vector>

#include "avse/core/tensor.h"

namespace avse::visual {

inline constexpr int kMouthHeight = 16;
inline constexpr int kMouthWidth = 24;
inline constexpr int kMouthChannels = 3;
inline constexpr int kMouthPixels = kMouthHeight * kMouthWidth * kMouthChannels;
inline constexpr int kVisualContext = 5;
inline constexpr int kVisualStackChannels = kVisualContext * kMouthChannels;
inline constexpr double kImageStdFloor = 1e-8;

// 16 x 24 x 3 RGB crop. Raw images live in [0, 1]; normalized ones have
// zero mean and unit std over all 1152 values.
struct MouthImage {
  Tensor pixels{Dims{kMouthHeight, kMouthWidth, kMouthChannels}};
  bool normalized = false;
};

struct ImageStats {
  float mean = 0.0f;
  float std = 1.0f;
};

std::pair<MouthImage, ImageStats> NormalizeImageWithStats(const MouthImage& img);
MouthImage NormalizeImage(const MouthImage& img);

// Inverse of NormalizeImage for the given stats, clipped to [0, 1].
MouthImage UnnormalizeImage(const Tensor& normalized_pixels,
                            const ImageStats& stats);

// 16 x 24 x 15 stack of frames t-2..t+2 (edge frames replicated). Channels
// are frame-major: channel 3*f + c is colour c of context frame f.
Tensor VisualContext(const std::vector<MouthImage>& seq, int t);

// Common frame count of an audio and a video stream (truncation).
int AlignStreams(int audio_frames, int video_frames);

}  // namespace avse::visual

#endif  // AVSE_VISUAL_IMAGE_H_
