#ifndef AVSE_DSP_RESAMPLE_H_
#define AVSE_DSP_RESAMPLE_H_

#include <vector>

namespace avse::dsp {

struct ResampleOptions {
  double kaiser_beta = 8.0;
  // Half-length of the prototype filter, in multiples of max(up, down).
  int half_length_factor = 10;
};

// Kaiser-windowed sinc lowpass prototype for the upsampled rate, cutoff at
// 1 / max(up, down) of Nyquist, DC gain `up`.
std::vector<double> DesignPolyphaseFilter(int up, int down,
                                          const ResampleOptions& opts = {});

// Rational resampling by up/down with a zero-phase FIR; output length is
// ceil(n * up / down).
std::vector<float> ResamplePoly(const std::vector<float>& x, int up, int down,
                                const ResampleOptions& opts = {});

}  // namespace avse::dsp

#endif  // AVSE_DSP_RESAMPLE_H_
