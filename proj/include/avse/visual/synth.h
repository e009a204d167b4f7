#ifndef AVSE_VISUAL_SYNTH_H_
#define AVSE_VISUAL_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "avse/dsp/waveform.h"
#include "avse/visual/image.h"

namespace avse::visual {

inline constexpr int kVideoFps = 50;
inline constexpr int kSamplesPerVideoFrame = dsp::kSampleRate / kVideoFps;

// Synthetic talker: a smooth random articulation envelope a(t) in [0, 1]
// gates a harmonic tone and sets the mouth opening of every video frame.
struct SynthCorpusSpec {
  int n_utterances = 10;
  double duration_s = 1.5;
  std::uint64_t seed = 1;
  double articulation_rate_hz = 4.0;
  double carrier_hz = 140.0;
  double amplitude = 0.3;
  // Highest harmonic kept below this frequency.
  double max_harmonic_hz = 4000.0;
  // RMS of white recording noise added to every clean utterance.
  double noise_floor = 0.0;

  void Validate() const;
};

struct SynthUtterance {
  std::string id;
  dsp::Waveform audio;
  std::vector<MouthImage> frames;  // raw, 50 fps
  std::vector<double> opening;     // a(t) at each video frame
};

// Per-sample envelope for `num_samples` samples.
std::vector<double> ArticulationEnvelope(std::size_t num_samples, double rate_hz,
                                         std::uint64_t seed);

// Sum of harmonics of `carrier_hz` with 1/h amplitudes and seeded phases,
// normalized so the harmonic weights sum to one.
std::vector<double> HarmonicTone(std::size_t num_samples, double carrier_hz,
                                 double max_harmonic_hz, std::uint64_t seed);

// Renders an ellipse mouth with opening in [0, 1] on an 8-bit grid.
MouthImage RenderMouth(double opening);

// Video frames are sampled at the centre of the matching STFT frame
// (sample 320 t + 256), so frame t of both streams covers the same instant.
SynthUtterance SynthesizeUtterance(const SynthCorpusSpec& spec, int index);
std::vector<SynthUtterance> SynthCorpus(const SynthCorpusSpec& spec);

// A background talker built like a corpus utterance (same carrier),
// optionally summing several independent talkers into babble.
dsp::Waveform SynthTalkerNoise(const SynthCorpusSpec& spec, double duration_s,
                               int talkers, std::uint64_t seed);

// Low-frequency engine-like rumble: leaky-integrated noise plus a weak
// low harmonic hum.
dsp::Waveform SynthAmbientNoise(double duration_s, std::uint64_t seed);

}  // namespace avse::visual

#endif  // AVSE_VISUAL_SYNTH_H_
