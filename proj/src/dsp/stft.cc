#include "avse/dsp/stft.h"

#include <cmath>
#include <complex>

#include "avse/core/error.h"
#include "avse/dsp/fft.h"

namespace avse::dsp {

int NumFrames(std::size_t num_samples) {
  if (num_samples < static_cast<std::size_t>(kWindowLength)) return 0;
  return static_cast<int>((num_samples - kWindowLength) / kHop) + 1;
}

std::size_t SynthesisLength(int num_frames) {
  return static_cast<std::size_t>(num_frames - 1) * kHop + kWindowLength;
}

SpectroFrames Stft(const Waveform& w) {
  if (w.rate != kSampleRate)
    throw Error("stft: expected " + std::to_string(kSampleRate) +
                " Hz input, got " + std::to_string(w.rate));
  const int frames = NumFrames(w.size());
  if (frames == 0)
    throw Error("stft: utterance too short (" + std::to_string(w.size()) +
                " samples, need " + std::to_string(kWindowLength) + ")");
  const std::vector<double> window = PeriodicHann(kWindowLength);
  RealDft dft(kWindowLength);
  std::vector<double> buf(kWindowLength);
  std::vector<std::complex<double>> spec(kNumBins);
  SpectroFrames out{Tensor({frames, kNumBins}), Tensor({frames, kNumBins})};
  for (int t = 0; t < frames; ++t) {
    const float* x = w.samples.data() + static_cast<std::size_t>(t) * kHop;
    for (int i = 0; i < kWindowLength; ++i) buf[i] = x[i] * window[i];
    dft.Forward(buf.data(), spec.data());
    for (int k = 0; k < kNumBins; ++k) {
      double p = std::norm(spec[k]);
      out.logpow.at(t, k) = static_cast<float>(std::log(std::max(p, kLogPowerFloor)));
      out.phase.at(t, k) = static_cast<float>(std::arg(spec[k]));
    }
  }
  return out;
}

Waveform Istft(const Tensor& magnitude, const Tensor& phase) {
  if (magnitude.rank() != 2 || !magnitude.SameShape(phase) ||
      magnitude.dim(1) != kNumBins)
    throw Error("istft: magnitude " + magnitude.ShapeString() + " and phase " +
                phase.ShapeString() + " must both be T x " +
                std::to_string(kNumBins));
  for (float m : magnitude.values())
    if (!(m >= 0.0f) || !std::isfinite(m))
      throw Error("istft: magnitudes must be finite and non-negative");
  const int frames = magnitude.dim(0);
  const std::size_t len = SynthesisLength(frames);
  const std::vector<double> window = PeriodicHann(kWindowLength);
  RealDft dft(kWindowLength);
  std::vector<double> acc(len, 0.0), wsum(len, 0.0), buf(kWindowLength);
  std::vector<std::complex<double>> spec(kNumBins);
  for (int t = 0; t < frames; ++t) {
    for (int k = 0; k < kNumBins; ++k)
      spec[k] = std::polar<double>(magnitude.at(t, k), phase.at(t, k));
    dft.Inverse(spec.data(), buf.data());
    const std::size_t off = static_cast<std::size_t>(t) * kHop;
    for (int i = 0; i < kWindowLength; ++i) {
      acc[off + i] += buf[i] * window[i];
      wsum[off + i] += window[i] * window[i];
    }
  }
  Waveform out;
  out.rate = kSampleRate;
  out.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i)
    out.samples[i] = static_cast<float>(acc[i] / std::max(wsum[i], kWolaFloor));
  return out;
}

Tensor MagnitudeFromLogPower(const Tensor& logpow) {
  Tensor m(logpow.dims());
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = static_cast<float>(std::exp(0.5 * static_cast<double>(logpow[i])));
  return m;
}

}  // namespace avse::dsp
