#ifndef AVSE_DSP_WAVEFORM_H_
#define AVSE_DSP_WAVEFORM_H_

#include <filesystem>
#include <vector>

namespace avse::dsp {

inline constexpr int kSampleRate = 16000;

// Mono PCM audio as floats nominally in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / rate;
  }
  // Throws unless rate > 0 and every sample is finite.
  void Validate() const;
};

// Mean squared sample value.
double Power(const std::vector<float>& x);

// Reads 16-bit PCM WAV. Multi-channel files contribute their first channel;
// 48 kHz input is decimated to 16 kHz.
Waveform ReadWav(const std::filesystem::path& path);

// Writes 16-bit PCM mono. Samples outside [-1, 1] are clipped (with a
// warning naming the count).
void WriteWav(const std::filesystem::path& path, const Waveform& w);

}  // namespace avse::dsp

#endif  // AVSE_DSP_WAVEFORM_H_
