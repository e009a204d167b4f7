#include "avse/visual/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "avse/core/error.h"
#include "avse/core/rng.h"
#include "avse/dsp/stft.h"

namespace avse::visual {

namespace {

constexpr double kLeadSilence[2] = {0.10, 0.25};
constexpr double kTailSilence = 0.12;
constexpr double kPause[2] = {0.08, 0.35};

// Stream ids for Rng::Derive.
enum Stream : std::uint64_t {
  kEnvelopeStream = 1,
  kToneStream = 2,
  kFloorStream = 3,
  kTalkerStream = 100,
  kAmbientStream = 200,
};

std::string UtteranceId(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "utt%04d", index);
  return buf;
}

}  // namespace

void SynthCorpusSpec::Validate() const {
  if (n_utterances <= 0) throw Error("synth: n_utterances must be positive");
  if (!(duration_s > 0.04)) throw Error("synth: duration must exceed one frame");
  if (!(articulation_rate_hz > 0) || !(carrier_hz > 0) || !(amplitude > 0))
    throw Error("synth: rates and amplitude must be positive");
  if (!(noise_floor >= 0)) throw Error("synth: noise_floor must be non-negative");
}

std::vector<double> ArticulationEnvelope(std::size_t num_samples, double rate_hz,
                                         std::uint64_t seed) {
  Rng rng(seed);
  const double fs = dsp::kSampleRate;
  const double total = num_samples / fs;
  std::vector<double> a(num_samples, 0.0);
  double t = rng.Uniform(kLeadSilence[0], kLeadSilence[1]);
  while (t < total - kTailSilence) {
    const auto syllables = rng.UniformInt(1, 3);
    for (std::int64_t s = 0; s < syllables; ++s) {
      const double len = rng.Uniform(0.7, 1.3) / rate_hz;
      const double peak = rng.Uniform(0.45, 1.0);
      const double end = std::min(t + len, total - kTailSilence);
      if (end <= t) break;
      const auto lo = static_cast<std::size_t>(t * fs);
      const auto hi = std::min(num_samples, static_cast<std::size_t>(end * fs));
      for (std::size_t i = lo; i < hi; ++i) {
        double s_ = std::sin(M_PI * (i / fs - t) / (end - t));
        a[i] = std::max(a[i], peak * s_ * s_);
      }
      t = end;
    }
    t += rng.Uniform(kPause[0], kPause[1]);
  }
  for (double& v : a) v = std::clamp(v, 0.0, 1.0);
  return a;
}

std::vector<double> HarmonicTone(std::size_t num_samples, double carrier_hz,
                                 double max_harmonic_hz, std::uint64_t seed) {
  Rng rng(seed);
  const int harmonics = std::max(1, static_cast<int>(max_harmonic_hz / carrier_hz));
  std::vector<double> phase(harmonics), weight(harmonics);
  double wsum = 0.0;
  for (int h = 0; h < harmonics; ++h) {
    phase[h] = rng.Uniform(0.0, 2.0 * M_PI);
    weight[h] = 1.0 / (h + 1);
    wsum += weight[h];
  }
  std::vector<double> x(num_samples, 0.0);
  const double w0 = 2.0 * M_PI * carrier_hz / dsp::kSampleRate;
  for (int h = 0; h < harmonics; ++h) {
    const double g = weight[h] / wsum;
    for (std::size_t i = 0; i < num_samples; ++i)
      x[i] += g * std::sin(w0 * (h + 1) * static_cast<double>(i) + phase[h]);
  }
  return x;
}

MouthImage RenderMouth(double opening) {
  opening = std::clamp(opening, 0.0, 1.0);
  constexpr float kSkin[3] = {0.84f, 0.64f, 0.54f};
  constexpr float kLip[3] = {0.72f, 0.34f, 0.36f};
  constexpr float kCavity[3] = {0.18f, 0.05f, 0.08f};
  const double cy = 7.5, cx = 11.5;
  const double lip_rx = 9.0, lip_ry = 2.6 + 3.2 * opening;
  const double cav_rx = 7.0, cav_ry = 4.6 * opening;
  constexpr int kSuper = 4;
  MouthImage img;
  for (int y = 0; y < kMouthHeight; ++y)
    for (int x = 0; x < kMouthWidth; ++x) {
      double acc[3] = {0, 0, 0};
      for (int sy = 0; sy < kSuper; ++sy)
        for (int sx = 0; sx < kSuper; ++sx) {
          const double py = y + (sy + 0.5) / kSuper - 0.5 - cy;
          const double px = x + (sx + 0.5) / kSuper - 0.5 - cx;
          const float* col = kSkin;
          if ((px * px) / (lip_rx * lip_rx) + (py * py) / (lip_ry * lip_ry) <= 1.0) col = kLip;
          if (cav_ry > 0 &&
              (px * px) / (cav_rx * cav_rx) + (py * py) / (cav_ry * cav_ry) <= 1.0)
            col = kCavity;
          for (int c = 0; c < 3; ++c) acc[c] += col[c];
        }
      for (int c = 0; c < 3; ++c) {
        double v = acc[c] / (kSuper * kSuper);
        img.pixels.at(y, x, c) = static_cast<float>(std::round(v * 255.0) / 255.0);
      }
    }
  return img;
}

SynthUtterance SynthesizeUtterance(const SynthCorpusSpec& spec, int index) {
  spec.Validate();
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * dsp::kSampleRate));
  const std::uint64_t seed = Rng::Derive(spec.seed, static_cast<std::uint64_t>(index)).NextU64();
  const auto a = ArticulationEnvelope(n, spec.articulation_rate_hz,
                                      Rng::Derive(seed, kEnvelopeStream).NextU64());
  const auto tone = HarmonicTone(n, spec.carrier_hz, spec.max_harmonic_hz,
                                 Rng::Derive(seed, kToneStream).NextU64());
  SynthUtterance u;
  u.id = UtteranceId(index);
  u.audio.rate = dsp::kSampleRate;
  u.audio.samples.resize(n);
  Rng floor = Rng::Derive(seed, kFloorStream);
  for (std::size_t i = 0; i < n; ++i)
    u.audio.samples[i] =
        static_cast<float>(spec.amplitude * a[i] * tone[i] + spec.noise_floor * floor.Normal());
  const int frames = static_cast<int>(n / kSamplesPerVideoFrame);
  for (int t = 0; t < frames; ++t) {
    std::size_t centre = std::min<std::size_t>(
        n - 1, static_cast<std::size_t>(t) * dsp::kHop + dsp::kWindowLength / 2);
    u.opening.push_back(a[centre]);
    u.frames.push_back(RenderMouth(a[centre]));
  }
  return u;
}

std::vector<SynthUtterance> SynthCorpus(const SynthCorpusSpec& spec) {
  spec.Validate();
  std::vector<SynthUtterance> out;
  out.reserve(spec.n_utterances);
  for (int i = 0; i < spec.n_utterances; ++i) out.push_back(SynthesizeUtterance(spec, i));
  return out;
}

dsp::Waveform SynthTalkerNoise(const SynthCorpusSpec& spec, double duration_s,
                               int talkers, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * dsp::kSampleRate));
  dsp::Waveform w;
  w.samples.assign(n, 0.0f);
  for (int k = 0; k < talkers; ++k) {
    const std::uint64_t s = Rng::Derive(seed, kTalkerStream + k).NextU64();
    const auto a = ArticulationEnvelope(n, spec.articulation_rate_hz, Rng::Derive(s, kEnvelopeStream).NextU64());
    const auto tone = HarmonicTone(n, spec.carrier_hz, spec.max_harmonic_hz, Rng::Derive(s, kToneStream).NextU64());
    for (std::size_t i = 0; i < n; ++i)
      w.samples[i] += static_cast<float>(spec.amplitude * a[i] * tone[i] / talkers);
  }
  return w;
}

dsp::Waveform SynthAmbientNoise(double duration_s, std::uint64_t seed) {
  Rng rng = Rng::Derive(seed, kAmbientStream);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * dsp::kSampleRate));
  dsp::Waveform w;
  w.samples.resize(n);
  double state = 0.0, power = 0.0;
  std::vector<double> x(n);
  const double hum_hz = 33.0;
  for (std::size_t i = 0; i < n; ++i) {
    state = 0.97 * state + rng.Normal();
    double hum = 0.0;
    for (int h = 1; h <= 4; ++h)
      hum += std::sin(2.0 * M_PI * hum_hz * h * i / dsp::kSampleRate) / h;
    x[i] = state + 2.0 * hum + 0.3 * rng.Normal();
    power += x[i] * x[i];
  }
  const double scale = 0.05 / std::sqrt(power / std::max<std::size_t>(n, 1));
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = static_cast<float>(x[i] * scale);
  return w;
}

}  // namespace avse::visual
