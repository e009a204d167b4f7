#include "avse/dsp/mixing.h"

#include <cmath>

#include "avse/core/error.h"
#include "avse/core/rng.h"

namespace avse::dsp {

std::vector<float> AlignNoise(const std::vector<float>& noise,
                              std::size_t length, std::uint64_t seed) {
  if (noise.empty()) throw Error("mix: empty noise signal");
  std::vector<float> out(length);
  if (noise.size() > length) {
    Rng rng(seed);
    auto offset = static_cast<std::size_t>(
        rng.UniformInt(0, static_cast<std::int64_t>(noise.size() - length)));
    std::copy_n(noise.begin() + static_cast<std::ptrdiff_t>(offset), length,
                out.begin());
  } else {
    for (std::size_t i = 0; i < length; ++i) out[i] = noise[i % noise.size()];
  }
  return out;
}

double GainForRatio(double signal_power, double noise_power, double ratio_db) {
  return std::sqrt(signal_power / (noise_power * std::pow(10.0, ratio_db / 10.0)));
}

double RatioDb(double signal_power, double noise_power) {
  return 10.0 * std::log10(signal_power / noise_power);
}

MixResult MixSirSar(const Waveform& clean, const Waveform& interference,
                    const Waveform& ambient, const MixSpec& spec) {
  if (clean.rate != interference.rate || clean.rate != ambient.rate)
    throw Error("mix: sample rates differ");
  if (!std::isfinite(spec.sir_db) || !std::isfinite(spec.sar_db))
    throw Error("mix: SIR/SAR must be finite");
  const std::size_t n = clean.size();
  const double pc = Power(clean.samples);
  if (!(pc > 0.0)) throw Error("mix: clean signal has zero power");

  MixResult r;
  r.interference = AlignNoise(interference.samples, n, Rng::Derive(spec.seed, 1).NextU64());
  r.ambient = AlignNoise(ambient.samples, n, Rng::Derive(spec.seed, 2).NextU64());
  const double pi = Power(r.interference), pa = Power(r.ambient);
  if (!(pi > 0.0)) throw Error("mix: interference '" + spec.interference_id + "' has zero power");
  if (!(pa > 0.0)) throw Error("mix: ambient '" + spec.ambient_id + "' has zero power");

  r.interference_gain = GainForRatio(pc, pi, spec.sir_db);
  r.ambient_gain = GainForRatio(pc, pa, spec.sar_db);
  for (std::size_t i = 0; i < n; ++i) {
    r.interference[i] = static_cast<float>(r.interference_gain * r.interference[i]);
    r.ambient[i] = static_cast<float>(r.ambient_gain * r.ambient[i]);
  }
  r.noisy.rate = clean.rate;
  r.noisy.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    r.noisy.samples[i] = clean.samples[i] + (r.interference[i] + r.ambient[i]);
  r.achieved_sir_db = RatioDb(pc, Power(r.interference));
  r.achieved_sar_db = RatioDb(pc, Power(r.ambient));
  return r;
}

}  // namespace avse::dsp
