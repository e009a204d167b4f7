#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>

#include "avse/core/error.h"
#include "avse/core/rng.h"
#include "avse/dsp/features.h"
#include "avse/dsp/fft.h"
#include "avse/dsp/mixing.h"
#include "avse/dsp/resample.h"
#include "avse/dsp/stft.h"
#include "avse/dsp/waveform.h"

namespace avse::dsp {
namespace {

Waveform Noise(std::size_t n, std::uint64_t seed, double rms = 0.1) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) s = static_cast<float>(rms * rng.Normal());
  return w;
}

Waveform Sine(std::size_t n, double hz, double amp = 1.0) {
  Waveform w;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = static_cast<float>(amp * std::sin(2.0 * M_PI * hz * i / kSampleRate));
  return w;
}

double InteriorRelRms(const std::vector<float>& ref, const std::vector<float>& out) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = kWindowLength; i + kWindowLength < ref.size(); ++i) {
    double d = static_cast<double>(out[i]) - ref[i];
    num += d * d;
    den += static_cast<double>(ref[i]) * ref[i];
  }
  return std::sqrt(num / den);
}

// Direct O(N^2) DFT of a windowed frame.
std::vector<double> DirectPower(const float* x, const std::vector<double>& window) {
  std::vector<double> p(kNumBins);
  for (int k = 0; k < kNumBins; ++k) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < kWindowLength; ++i)
      acc += x[i] * window[i] * std::polar(1.0, -2.0 * M_PI * k * i / kWindowLength);
    p[k] = std::norm(acc);
  }
  return p;
}

TEST(Stft, FrameRateAndCount) {
  EXPECT_EQ(NumFrames(16000), 49);
  EXPECT_EQ(NumFrames(512), 1);
  EXPECT_EQ(NumFrames(511), 0);
  EXPECT_EQ(SynthesisLength(49), 48u * 320 + 512);
  // 50 frames per second: hop 320 at 16 kHz.
  EXPECT_EQ(kSampleRate / kHop, 50);
  EXPECT_EQ(kNumBins, 257);
  auto f = Stft(Noise(16000, 1));
  EXPECT_EQ(f.logpow.dims(), (Dims{49, 257}));
  EXPECT_EQ(f.phase.dims(), (Dims{49, 257}));
}

TEST(Stft, TooShortAndWrongRate) {
  try {
    Stft(Noise(511, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("too short"), std::string::npos);
  }
  Waveform w = Noise(1024, 1);
  w.rate = 8000;
  EXPECT_THROW(Stft(w), Error);
}

TEST(Stft, ZeroSignalHitsFloor) {
  Waveform w;
  w.samples.assign(2000, 0.0f);
  auto f = Stft(w);
  const float floor = static_cast<float>(std::log(kLogPowerFloor));
  for (float v : f.logpow.values()) EXPECT_EQ(v, floor);
}

TEST(Stft, SinePeakAtBin32MatchesDirectDft) {
  Waveform w = Sine(16000, 1000.0);
  auto f = Stft(w);
  std::vector<double> mean(kNumBins, 0.0);
  for (int t = 0; t < f.num_frames(); ++t)
    for (int k = 0; k < kNumBins; ++k) mean[k] += f.logpow.at(t, k);
  int arg = static_cast<int>(std::max_element(mean.begin(), mean.end()) - mean.begin());
  EXPECT_EQ(arg, 32);
  const auto window = PeriodicHann(kWindowLength);
  for (int t : {0, 7, 48}) {
    auto p = DirectPower(w.samples.data() + t * kHop, window);
    for (int k = 0; k < kNumBins; ++k) {
      double ref = std::log(std::max(p[k], kLogPowerFloor));
      EXPECT_NEAR(f.logpow.at(t, k), ref, 1e-4 * std::max(1.0, std::fabs(ref))) << t << "," << k;
    }
  }
}

TEST(Stft, RoundTripInteriorAcrossSeeds) {
  for (int seed = 0; seed < 20; ++seed) {
    Waveform x = Noise(8000 + 37 * seed, seed, 0.05 + 0.02 * seed);
    auto f = Stft(x);
    Waveform y = Istft(MagnitudeFromLogPower(f.logpow), f.phase);
    ASSERT_EQ(y.size(), SynthesisLength(f.num_frames()));
    EXPECT_LT(InteriorRelRms(x.samples, y.samples), 1e-6) << "seed " << seed;
  }
}

TEST(Istft, ZeroMagnitudeGivesSilence) {
  Tensor mag({4, kNumBins}, 0.0f), phase({4, kNumBins}, 0.3f);
  Waveform w = Istft(mag, phase);
  EXPECT_EQ(w.size(), 3u * 320 + 512);
  for (float s : w.samples) EXPECT_EQ(s, 0.0f);
}

TEST(Istft, SingleFrameIsRenormalizedInverseDft) {
  Rng rng(5);
  Tensor mag({1, kNumBins}), phase({1, kNumBins});
  for (int k = 0; k < kNumBins; ++k) {
    mag.at(0, k) = static_cast<float>(rng.Uniform());
    phase.at(0, k) = static_cast<float>(rng.Uniform(-M_PI, M_PI));
  }
  // DC and Nyquist bins of a real signal have zero phase.
  phase.at(0, 0) = 0.0f;
  phase.at(0, kNumBins - 1) = 0.0f;
  Waveform w = Istft(mag, phase);
  ASSERT_EQ(w.size(), 512u);
  const auto window = PeriodicHann(kWindowLength);
  for (int i = 0; i < kWindowLength; ++i) {
    double x = 0.0;
    for (int k = 0; k < kNumBins; ++k) {
      double c = (k == 0 || k == kNumBins - 1) ? 1.0 : 2.0;
      x += c * mag.at(0, k) * std::cos(2.0 * M_PI * k * i / kWindowLength + phase.at(0, k));
    }
    x /= kWindowLength;
    double expect = x * window[i] / std::max(window[i] * window[i], kWolaFloor);
    EXPECT_NEAR(w.samples[i], expect, 1e-5 * std::max(1.0, std::fabs(expect))) << i;
  }
}

TEST(Istft, ShapeMismatchThrows) {
  EXPECT_THROW(Istft(Tensor({3, kNumBins}), Tensor({4, kNumBins})), Error);
  EXPECT_THROW(Istft(Tensor({3, 100}), Tensor({3, 100})), Error);
  Tensor neg({1, kNumBins}, -1.0f);
  EXPECT_THROW(Istft(neg, Tensor({1, kNumBins})), Error);
}

TEST(Normalize, ZeroMeanUnitStd) {
  Rng rng(2);
  Tensor x({40, 6});
  for (int t = 0; t < 40; ++t)
    for (int k = 0; k < 6; ++k) x.at(t, k) = static_cast<float>(3.0 * k + (k + 1) * rng.Normal());
  auto [n, stats] = NormalizeUtterance(x);
  for (int k = 0; k < 6; ++k) {
    double s = 0, s2 = 0;
    for (int t = 0; t < 40; ++t) {
      s += n.at(t, k);
      s2 += n.at(t, k) * n.at(t, k);
    }
    EXPECT_NEAR(s / 40, 0.0, 1e-5);
    EXPECT_NEAR(std::sqrt(s2 / 40), 1.0, 1e-4);
  }
  Tensor back = Denormalize(n, stats);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_NEAR(back[i], x[i], 1e-5 * std::max(1.0f, std::fabs(x[i])));
}

TEST(Normalize, ConstantFramesGiveZeros) {
  Tensor x({5, 3}, 2.5f);
  auto [n, stats] = NormalizeUtterance(x);
  for (float v : n.values()) EXPECT_EQ(v, 0.0f);
  EXPECT_FLOAT_EQ(stats.std[0], static_cast<float>(kStdFloor));
}

TEST(Normalize, InsufficientFrames) {
  try {
    NormalizeUtterance(Tensor({1, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient frames"), std::string::npos);
  }
}

TEST(Denormalize, ZerosGiveMeanAndIdentityStatsKeepInput) {
  NormStats s{{1.0f, -2.0f}, {3.0f, 0.5f}};
  Tensor z({3, 2}, 0.0f);
  Tensor d = Denormalize(z, s);
  EXPECT_EQ(d.at(2, 0), 1.0f);
  EXPECT_EQ(d.at(2, 1), -2.0f);
  Tensor x(Dims{1, 2}, std::vector<float>{0.25f, -7.0f});
  EXPECT_EQ(Denormalize(x, NormStats::Identity(2)), x);
  EXPECT_THROW(Denormalize(Tensor({1, 3}), s), Error);
}

TEST(ContextWindow, EdgeReplicationAndInterior) {
  Tensor f({5, 2});
  for (int t = 0; t < 5; ++t)
    for (int k = 0; k < 2; ++k) f.at(t, k) = static_cast<float>(10 * t + k);
  Tensor c = ContextWindow(f);
  ASSERT_EQ(c.dims(), (Dims{5, 2, 5}));
  const int first[5] = {0, 0, 0, 1, 2};
  for (int j = 0; j < 5; ++j) EXPECT_EQ(c.at(0, 1, j), f.at(first[j], 1));
  for (int j = 0; j < 5; ++j) EXPECT_EQ(c.at(2, 0, j), f.at(j, 0));
  // Centre column is the unmodified frame.
  for (int t = 0; t < 5; ++t)
    for (int k = 0; k < 2; ++k) EXPECT_EQ(c.at(t, k, 2), f.at(t, k));
  Tensor one(Dims{1, 2}, std::vector<float>{4.0f, 5.0f});
  Tensor c1 = ContextWindow(one);
  for (int j = 0; j < 5; ++j) EXPECT_EQ(c1.at(0, 1, j), 5.0f);
}

TEST(Mixing, ClosedFormGains) {
  EXPECT_NEAR(GainForRatio(1.0, 1.0, 0.0), 1.0, 1e-12);
  EXPECT_NEAR(GainForRatio(1.0, 1.0, 20.0), 0.1, 1e-12);
  EXPECT_NEAR(RatioDb(1.0, 0.01), 20.0, 1e-12);
}

TEST(Mixing, AchievesRequestedRatiosOnHundredCases) {
  Rng rng(11);
  for (int c = 0; c < 100; ++c) {
    Waveform clean = Noise(4000 + 13 * c, 1000 + c, rng.Uniform(0.01, 0.5));
    Waveform interf = Noise(static_cast<std::size_t>(rng.UniformInt(1000, 9000)), 2000 + c);
    Waveform ambient = Noise(static_cast<std::size_t>(rng.UniformInt(1000, 9000)), 3000 + c, 0.3);
    MixSpec spec{rng.Uniform(-10, 20), rng.Uniform(-10, 20), "i", "a", static_cast<std::uint64_t>(c)};
    MixResult r = MixSirSar(clean, interf, ambient, spec);
    const double pc = Power(clean.samples);
    EXPECT_NEAR(RatioDb(pc, Power(r.interference)), spec.sir_db, 0.01) << c;
    EXPECT_NEAR(RatioDb(pc, Power(r.ambient)), spec.sar_db, 0.01) << c;
    // Linearity: the mixture minus the clean signal is exactly the sum of
    // the scaled components.
    for (std::size_t i = 0; i < clean.size(); ++i)
      ASSERT_FLOAT_EQ(r.noisy.samples[i], clean.samples[i] + (r.interference[i] + r.ambient[i]));
  }
}

TEST(Mixing, ComponentsAreScaledAlignedNoise) {
  Waveform clean = Noise(3000, 1), interf = Noise(5000, 2), ambient = Noise(1200, 3);
  MixSpec spec{5.0, 10.0, "i", "a", 42};
  MixResult r = MixSirSar(clean, interf, ambient, spec);
  // Each noise is cropped with its own stream derived from the mix seed.
  auto ai = AlignNoise(interf.samples, clean.size(), Rng::Derive(42, 1).NextU64());
  // The ambient noise is shorter than the utterance and is looped.
  auto aa = AlignNoise(ambient.samples, clean.size(), 7);
  EXPECT_EQ(aa[1200], ambient.samples[0]);
  for (std::size_t i = 0; i < clean.size(); ++i)
    EXPECT_FLOAT_EQ(r.interference[i], static_cast<float>(r.interference_gain * ai[i]));
}

TEST(Mixing, ZeroPowerErrors) {
  Waveform zero;
  zero.samples.assign(1000, 0.0f);
  Waveform n = Noise(1000, 1);
  EXPECT_THROW(MixSirSar(zero, n, n, {}), Error);
  EXPECT_THROW(MixSirSar(n, zero, n, {}), Error);
  EXPECT_THROW(MixSirSar(n, n, zero, {}), Error);
}

TEST(Wav, RoundTripQuantization) {
  auto path = std::filesystem::temp_directory_path() / "avse_dsp_test.wav";
  Waveform w = Sine(1600, 440.0, 0.5);
  WriteWav(path, w);
  Waveform r = ReadWav(path);
  ASSERT_EQ(r.size(), w.size());
  EXPECT_EQ(r.rate, kSampleRate);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(r.samples[i], w.samples[i], 1.0 / 32768);
}

TEST(Wav, RejectsGarbage) {
  auto path = std::filesystem::temp_directory_path() / "avse_dsp_garbage.wav";
  {
    std::ofstream os(path, std::ios::binary);
    os << "not a wav file at all";
  }
  EXPECT_THROW(ReadWav(path), Error);
  EXPECT_THROW(ReadWav("/nonexistent/x.wav"), Error);
}

TEST(Resample, LengthAndToneFidelity) {
  Waveform w = Sine(16000, 500.0);
  auto y = ResamplePoly(w.samples, 5, 8);
  EXPECT_EQ(y.size(), 10000u);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 500; i < 9500; ++i) {
    double e = std::sin(2.0 * M_PI * 500.0 * i / 10000.0);
    err += (y[i] - e) * (y[i] - e);
    ref += e * e;
  }
  EXPECT_LT(std::sqrt(err / ref), 1e-3);
  EXPECT_THROW(ResamplePoly(w.samples, 0, 1), Error);
}

TEST(Resample, RejectsAboveNewNyquist) {
  // 7 kHz is above the 5 kHz Nyquist of the 10 kHz output.
  Waveform w = Sine(16000, 7000.0);
  auto y = ResamplePoly(w.samples, 5, 8);
  double p = 0.0;
  for (std::size_t i = 500; i < 9500; ++i) p += y[i] * y[i];
  EXPECT_LT(p / 9000, 1e-4);
}

}  // namespace
}  // namespace avse::dsp
