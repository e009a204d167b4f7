#ifndef AVSE_DSP_MIXING_H_
#define AVSE_DSP_MIXING_H_

#include <cstdint>
#include <string>
#include <vector>

#include "avse/dsp/waveform.h"

namespace avse::dsp {

struct MixSpec {
  double sir_db = 0.0;
  double sar_db = 0.0;
  std::string interference_id;
  std::string ambient_id;
  std::uint64_t seed = 0;
};

struct MixResult {
  Waveform noisy;
  // Scaled noise components actually added: noisy = clean + interference +
  // ambient.
  std::vector<float> interference;
  std::vector<float> ambient;
  double interference_gain = 0.0;
  double ambient_gain = 0.0;
  double achieved_sir_db = 0.0;
  double achieved_sar_db = 0.0;
};

// Fits a noise to `length` samples: longer noises are cropped at a uniformly
// drawn offset, shorter ones are looped from the start.
std::vector<float> AlignNoise(const std::vector<float>& noise,
                              std::size_t length, std::uint64_t seed);

// Gain that puts `noise_power` at `ratio_db` below `signal_power`.
double GainForRatio(double signal_power, double noise_power, double ratio_db);

double RatioDb(double signal_power, double noise_power);

// clean + a * interference + b * ambient with the gains chosen so that the
// SIR and SAR over the whole utterance match the request.
MixResult MixSirSar(const Waveform& clean, const Waveform& interference,
                    const Waveform& ambient, const MixSpec& spec);

}  // namespace avse::dsp

#endif  // AVSE_DSP_MIXING_H_
