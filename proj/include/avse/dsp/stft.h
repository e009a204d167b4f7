#ifndef AVSE_DSP_STFT_H_
#define AVSE_DSP_STFT_H_

#include "avse/core/tensor.h"
#include "avse/dsp/waveform.h"

namespace avse::dsp {

// 32 ms analysis window with 37.5% overlap at 16 kHz: 50 frames/second.
inline constexpr int kWindowLength = 512;
inline constexpr int kHop = 320;
inline constexpr int kNumBins = kWindowLength / 2 + 1;
inline constexpr double kLogPowerFloor = 1e-12;
// Overlap-add normalizer floor; only the outermost samples of an utterance
// ever fall below it.
inline constexpr double kWolaFloor = 1e-3;

// Per-frame natural-log power and phase, both T x 257.
struct SpectroFrames {
  Tensor logpow;
  Tensor phase;

  int num_frames() const { return logpow.empty() ? 0 : logpow.dim(0); }
};

int NumFrames(std::size_t num_samples);
std::size_t SynthesisLength(int num_frames);

// Hann-windowed STFT. Requires rate 16 kHz and at least one full window;
// shorter input throws "too short".
SpectroFrames Stft(const Waveform& w);

// Weighted overlap-add resynthesis with the analysis window, normalized by
// the summed squared window. Output length is (T-1)*320 + 512.
Waveform Istft(const Tensor& magnitude, const Tensor& phase);

// exp(logpow / 2), the amplitude used for resynthesis.
Tensor MagnitudeFromLogPower(const Tensor& logpow);

}  // namespace avse::dsp

#endif  // AVSE_DSP_STFT_H_
