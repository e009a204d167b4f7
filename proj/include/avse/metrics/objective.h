#ifndef AVSE_METRICS_OBJECTIVE_H_
#define AVSE_METRICS_OBJECTIVE_H_

#include <vector>

#include "avse/dsp/waveform.h"

namespace avse::metrics {

// sum (e - c)^2 / sum c^2 over the common prefix. Lower is better.
double Sdi(const dsp::Waveform& clean, const dsp::Waveform& enhanced);

struct StoiOptions {
  int sample_rate = 10000;
  int frame_length = 256;
  int fft_size = 512;
  int num_bands = 15;
  double min_freq_hz = 150.0;
  int segment_frames = 30;
  double beta_db = -15.0;
  double dynamic_range_db = 40.0;
};

// Short-time objective intelligibility of `degraded` against `clean`. Both
// are trimmed to the shorter length and resampled to opts.sample_rate; frames
// more than dynamic_range_db below the loudest clean frame are removed.
// Throws when fewer than segment_frames frames survive.
double Stoi(const dsp::Waveform& clean, const dsp::Waveform& degraded, const StoiOptions& opts = {});

// One-third octave band matrix (num_bands x fft_size/2+1) of 0/1 weights.
std::vector<std::vector<double>> ThirdOctaveBands(const StoiOptions& opts);

}  // namespace avse::metrics

#endif  // AVSE_METRICS_OBJECTIVE_H_
