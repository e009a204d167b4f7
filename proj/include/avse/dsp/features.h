#ifndef AVSE_DSP_FEATURES_H_
#define AVSE_DSP_FEATURES_H_

#include <utility>
#include <vector>

#include "avse/core/tensor.h"
#include "avse/dsp/stft.h"

namespace avse::dsp {

inline constexpr double kStdFloor = 1e-8;
inline constexpr int kContextRadius = 2;
inline constexpr int kContextWidth = 2 * kContextRadius + 1;

// Per-bin statistics of one utterance.
struct NormStats {
  std::vector<float> mean;
  std::vector<float> std;

  int dim() const { return static_cast<int>(mean.size()); }
  static NormStats Identity(int dim) {
    return {std::vector<float>(dim, 0.0f), std::vector<float>(dim, 1.0f)};
  }
  // 2 x D tensor: row 0 mean, row 1 std.
  Tensor ToTensor() const;
  static NormStats FromTensor(const Tensor& t);
};

// Mean/std over all T frames of each bin (population std, floored).
// Requires T >= 2.
NormStats ComputeNormStats(const Tensor& logpow);

std::pair<Tensor, NormStats> NormalizeUtterance(const Tensor& logpow);
inline std::pair<Tensor, NormStats> NormalizeUtterance(
    const SpectroFrames& frames) {
  return NormalizeUtterance(frames.logpow);
}

// Applies given statistics (used for clean targets with the noisy stats).
Tensor ApplyNormalization(const Tensor& logpow, const NormStats& stats);
Tensor Denormalize(const Tensor& normalized, const NormStats& stats);

// T x D frames -> T x D x 5 blocks; block t holds frames t-2..t+2 as its
// columns, replicating the first/last frame at the edges.
Tensor ContextWindow(const Tensor& frames);

}  // namespace avse::dsp

#endif  // AVSE_DSP_FEATURES_H_
