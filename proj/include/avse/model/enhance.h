#ifndef AVSE_MODEL_ENHANCE_H_
#define AVSE_MODEL_ENHANCE_H_

#include <vector>

#include "avse/dsp/features.h"
#include "avse/dsp/waveform.h"
#include "avse/model/avse_model.h"
#include "avse/visual/image.h"

namespace avse::model {

// Audio and video frame counts may differ by this much before the pair is
// treated as misaligned; within it the longer stream is truncated.
inline constexpr int kMaxFrameSlack = 3;

// Network-ready view of one utterance, T aligned time steps.
struct UtteranceFeatures {
  Tensor x;        // T x 257 x 5 x 1, normalized noisy log power
  Tensor z;        // T x 16 x 24 x 15, normalized mouth stacks (empty without video)
  Tensor y;        // T x 257 clean log power, normalized with the noisy stats (empty without clean)
  Tensor zc;       // T x 1152 normalized central mouth images (empty without video)
  Tensor phase;    // T x 257 noisy phase
  dsp::NormStats stats;                      // noisy-utterance statistics
  std::vector<visual::ImageStats> image_stats;  // per aligned video frame
  std::size_t num_samples = 0;               // noisy length

  int frames() const { return x.empty() ? 0 : x.dim(0); }
};

// `images` may be null for audio-only use. `clean`, when given, must have the
// noisy signal's length and yields the targets.
UtteranceFeatures PrepareUtterance(const dsp::Waveform& noisy,
                                   const std::vector<visual::MouthImage>* images,
                                   const dsp::Waveform* clean = nullptr);

// Copies rows [begin, end) of every populated tensor into a batch.
Batch SliceBatch(const UtteranceFeatures& f, int begin, int end);

struct EnhanceResult {
  dsp::Waveform enhanced;                // same length as the noisy input
  std::vector<visual::MouthImage> mouths;  // raw [0, 1]; empty for the audio-only model
  Tensor logpow;                         // T x 257 denormalized enhanced log power
};

ModelOutput<float> PredictFeatures(Model& model, const UtteranceFeatures& f, int batch_size = 256);

// Enhanced magnitude exp(logpow / 2) with the noisy phase, inverse STFT,
// zero-padded to the input length. Mouth reconstructions are un-normalized
// with each input frame's statistics.
EnhanceResult EnhanceUtterance(Model& model, const dsp::Waveform& noisy,
                               const std::vector<visual::MouthImage>& images, int batch_size = 256);
EnhanceResult EnhanceFeatures(Model& model, const UtteranceFeatures& f, int batch_size = 256);

}  // namespace avse::model

#endif  // AVSE_MODEL_ENHANCE_H_
