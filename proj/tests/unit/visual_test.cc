#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "avse/core/error.h"
#include "avse/core/rng.h"
#include "avse/visual/image.h"
#include "avse/visual/ppm.h"
#include "avse/visual/synth.h"

namespace avse::visual {
namespace {

MouthImage RandomImage(std::uint64_t seed) {
  Rng rng(seed);
  MouthImage img;
  for (auto& v : img.pixels.values()) v = static_cast<float>(rng.Uniform());
  return img;
}

void ExpectStandardized(const Tensor& t) {
  double s = 0, s2 = 0;
  for (float v : t.values()) s += v;
  const double mean = s / t.size();
  for (float v : t.values()) s2 += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 0.0, 1e-5);
  EXPECT_NEAR(std::sqrt(s2 / t.size()), 1.0, 1e-4);
}

double Pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

TEST(NormalizeImage, ConstantImageGivesZeros) {
  MouthImage img;
  img.pixels.Fill(0.5f);
  MouthImage n = NormalizeImage(img);
  EXPECT_TRUE(n.normalized);
  for (float v : n.pixels.values()) EXPECT_EQ(v, 0.0f);
}

TEST(NormalizeImage, StandardizesRandomImages) {
  for (int seed = 0; seed < 20; ++seed) ExpectStandardized(NormalizeImage(RandomImage(seed)).pixels);
}

TEST(NormalizeImage, InvariantToPositiveAffineIntensity) {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    MouthImage img = RandomImage(seed), shifted = img;
    const double a = rng.Uniform(0.2, 0.9), b = rng.Uniform(0.0, 0.1);
    for (auto& v : shifted.pixels.values()) v = static_cast<float>(a * v + b);
    Tensor x = NormalizeImage(img).pixels, y = NormalizeImage(shifted).pixels;
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], 1e-4);
  }
}

TEST(NormalizeImage, BrightnessOffsetIsRemoved) {
  MouthImage img = RandomImage(3), bright = img;
  for (auto& v : img.pixels.values()) v *= 0.5f;
  bright = img;
  for (auto& v : bright.pixels.values()) v += 0.25f;
  Tensor x = NormalizeImage(img).pixels, y = NormalizeImage(bright).pixels;
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], 1e-5);
}

TEST(NormalizeImage, UnnormalizeInverts) {
  MouthImage img = RandomImage(9);
  auto [n, stats] = NormalizeImageWithStats(img);
  MouthImage back = UnnormalizeImage(n.pixels, stats);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_NEAR(back.pixels[i], img.pixels[i], 1e-6);
}

TEST(VisualContext, EdgeReplicationAndFrameMajorOrder) {
  std::vector<MouthImage> seq(4);
  for (int f = 0; f < 4; ++f) seq[f].pixels.Fill(static_cast<float>(f));
  Tensor z = VisualContext(seq, 0);
  ASSERT_EQ(z.dims(), (Dims{16, 24, 15}));
  const int expect_t0[5] = {0, 0, 0, 1, 2};
  for (int f = 0; f < 5; ++f)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(z.at(3, 5, 3 * f + c), expect_t0[f]);
  Tensor z2 = VisualContext(seq, 2);
  const int expect_t2[5] = {0, 1, 2, 3, 3};
  for (int f = 0; f < 5; ++f) EXPECT_EQ(z2.at(0, 0, 3 * f + 1), expect_t2[f]);
}

TEST(VisualContext, CentreChannelsEqualFrame) {
  std::vector<MouthImage> seq;
  for (int f = 0; f < 7; ++f) seq.push_back(RandomImage(f));
  for (int t = 0; t < 7; ++t) {
    Tensor z = VisualContext(seq, t);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 24; ++x)
        for (int c = 0; c < 3; ++c) ASSERT_EQ(z.at(y, x, 6 + c), seq[t].pixels.at(y, x, c));
  }
}

TEST(VisualContext, SingleFrameGivesFiveCopies) {
  std::vector<MouthImage> seq{RandomImage(1)};
  Tensor z = VisualContext(seq, 0);
  for (int f = 0; f < 5; ++f) EXPECT_EQ(z.at(4, 7, 3 * f + 2), seq[0].pixels.at(4, 7, 2));
  EXPECT_THROW(VisualContext({}, 0), Error);
}

TEST(AlignStreams, Truncation) {
  EXPECT_EQ(AlignStreams(49, 50), 49);
  EXPECT_EQ(AlignStreams(50, 50), 50);
  EXPECT_EQ(AlignStreams(1, 100), 1);
}

TEST(Synth, ClosedMouthAndLeadingSilence) {
  MouthImage closed = RenderMouth(0.0), open = RenderMouth(1.0);
  double dc = 0, dopen = 0;
  for (float v : closed.pixels.values()) dc += v;
  for (float v : open.pixels.values()) dopen += v;
  EXPECT_GT(dc, dopen);  // the dark cavity only appears when open
  SynthCorpusSpec spec;
  SynthUtterance u = SynthesizeUtterance(spec, 0);
  // The envelope is zero before the first syllable (at least 0.1 s).
  for (int i = 0; i < 1600; ++i) ASSERT_EQ(u.audio.samples[i], 0.0f);
  EXPECT_EQ(u.opening[0], 0.0);
  for (float v : u.frames[0].pixels.values()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
    // 8-bit quantized.
    EXPECT_NEAR(v * 255.0f, std::round(v * 255.0f), 1e-3);
  }
}

TEST(Synth, FrameCountsAreSynchronous) {
  SynthCorpusSpec spec;
  spec.duration_s = 1.0;
  SynthUtterance u = SynthesizeUtterance(spec, 2);
  EXPECT_EQ(u.audio.size(), 16000u);
  EXPECT_EQ(u.frames.size(), 50u);
  EXPECT_EQ(u.opening.size(), 50u);
}

TEST(Synth, AudioRmsTracksMouthOpening) {
  SynthCorpusSpec spec;
  spec.n_utterances = 5;
  spec.duration_s = 3.0;
  for (const auto& u : SynthCorpus(spec)) {
    std::vector<double> rms, height;
    for (std::size_t t = 0; t < u.frames.size(); ++t) {
      const std::size_t start = t * 320;
      if (start + 512 > u.audio.size()) break;
      double p = 0.0;
      for (std::size_t i = start; i < start + 512; ++i) p += u.audio.samples[i] * u.audio.samples[i];
      rms.push_back(std::sqrt(p / 512));
      height.push_back(u.opening[t]);
    }
    EXPECT_GT(Pearson(rms, height), 0.95) << u.id;
  }
}

TEST(Synth, DeterministicUnderSeed) {
  SynthCorpusSpec spec;
  spec.n_utterances = 2;
  auto a = SynthCorpus(spec), b = SynthCorpus(spec);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(a[i].audio.samples, b[i].audio.samples);
    for (std::size_t f = 0; f < a[i].frames.size(); ++f) EXPECT_EQ(a[i].frames[f].pixels, b[i].frames[f].pixels);
  }
  spec.seed = 2;
  EXPECT_NE(SynthCorpus(spec)[0].audio.samples, a[0].audio.samples);
  auto n1 = SynthTalkerNoise(spec, 1.0, 3, 5), n2 = SynthTalkerNoise(spec, 1.0, 3, 5);
  EXPECT_EQ(n1.samples, n2.samples);
  EXPECT_EQ(SynthAmbientNoise(1.0, 4).samples, SynthAmbientNoise(1.0, 4).samples);
}

TEST(Synth, InvalidSpec) {
  SynthCorpusSpec spec;
  spec.n_utterances = 0;
  EXPECT_THROW(SynthCorpus(spec), Error);
}

TEST(Ppm, RoundTripOnByteGrid) {
  auto dir = std::filesystem::temp_directory_path() / "avse_visual_test";
  std::filesystem::remove_all(dir);
  std::vector<MouthImage> frames;
  for (int f = 0; f < 3; ++f) frames.push_back(RenderMouth(0.3 * f));
  WriteFrameSequence(dir, frames);
  EXPECT_TRUE(std::filesystem::exists(dir / "frame_00002.ppm"));
  EXPECT_EQ(FrameFileName(42), "frame_00042.ppm");
  auto back = ReadFrameSequence(dir);
  ASSERT_EQ(back.size(), 3u);
  for (int f = 0; f < 3; ++f)
    for (std::size_t i = 0; i < frames[f].pixels.size(); ++i)
      EXPECT_NEAR(back[f].pixels[i], frames[f].pixels[i], 1e-6);
}

TEST(Ppm, PgmRoundTripAndBadInput) {
  auto path = std::filesystem::temp_directory_path() / "avse_visual_test.pgm";
  Tensor g({3, 4});
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<float>(i) / 11.0f;
  WritePgm(path, g);
  Tensor r = ReadPgm(path);
  ASSERT_EQ(r.dims(), g.dims());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(r[i], g[i], 0.5 / 255);
  EXPECT_THROW(ReadPpm(path), Error);
}

}  // namespace
}  // namespace avse::visual
