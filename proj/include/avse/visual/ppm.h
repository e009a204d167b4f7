#ifndef AVSE_VISUAL_PPM_H_
#define AVSE_VISUAL_PPM_H_

#include <filesystem>
#include <string>
#include <vector>

#include "avse/core/tensor.h"
#include "avse/visual/image.h"

namespace avse::visual {

// Binary P6 with maxval 255. Pixels are H x W x 3 in [0, 1].
void WritePpm(const std::filesystem::path& path, const Tensor& rgb);
Tensor ReadPpm(const std::filesystem::path& path);

// Binary P5 greyscale; `gray` is H x W in [0, 1].
void WritePgm(const std::filesystem::path& path, const Tensor& gray);
Tensor ReadPgm(const std::filesystem::path& path);

// "frame_00042.ppm"
std::string FrameFileName(int index);

void WriteFrameSequence(const std::filesystem::path& dir,
                        const std::vector<MouthImage>& frames);
// Reads frame_00000.ppm, frame_00001.ppm, ... until the first gap (or
// `count` frames when count >= 0). Every frame must be 16 x 24.
std::vector<MouthImage> ReadFrameSequence(const std::filesystem::path& dir,
                                          int count = -1);

}  // namespace avse::visual

#endif  // AVSE_VISUAL_PPM_H_
