#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "avse/core/error.h"
#include "avse/core/rng.h"
#include "avse/metrics/objective.h"
#include "avse/metrics/scores.h"

namespace avse::metrics {
namespace {

dsp::Waveform SpeechLike(std::size_t n, std::uint64_t seed) {
  // Amplitude-modulated harmonics with pauses.
  Rng rng(seed);
  dsp::Waveform w;
  w.samples.resize(n);
  const double f0 = rng.Uniform(100, 200), rate = rng.Uniform(3, 5);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / dsp::kSampleRate;
    double env = std::max(0.0, std::sin(2.0 * M_PI * rate * t));
    double s = 0.0;
    for (int h = 1; h * f0 < 4000; ++h) s += std::sin(2.0 * M_PI * h * f0 * t + h) / h;
    w.samples[i] = static_cast<float>(0.2 * env * s);
  }
  return w;
}

dsp::Waveform AddNoise(const dsp::Waveform& x, double snr_db, std::uint64_t seed) {
  Rng rng(seed);
  double p = 0.0;
  for (float s : x.samples) p += s * s;
  p /= x.size();
  const double g = std::sqrt(p / std::pow(10.0, snr_db / 10.0));
  dsp::Waveform y = x;
  for (auto& s : y.samples) s = static_cast<float>(s + g * rng.Normal());
  return y;
}

std::vector<double> Lcg(std::size_t n, std::uint64_t s) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    out[i] = static_cast<double>(s >> 11) / 9007199254740992.0 * 2.0 - 1.0;
  }
  return out;
}

// Gated tones at 10 kHz (so no resampling is involved) with a reproducible
// LCG noise; the reference values come from an independent STOI
// implementation run on the same samples.
TEST(Stoi, MatchesReferenceImplementation) {
  const std::size_t n = 20000;
  dsp::Waveform x;
  x.rate = 10000;
  x.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double gate = (i % 8000) < 6000 ? 1.0 : 0.0;
    x.samples[i] = static_cast<float>(
        std::sin(2 * M_PI * 440 * i / 10000.0) * (0.6 + 0.4 * std::sin(2 * M_PI * 3 * i / 10000.0)) * gate +
        0.2 * std::sin(2 * M_PI * 1250 * i / 10000.0) * gate);
  }
  const auto noise = Lcg(n, 12345);
  const std::pair<double, double> cases[] = {
      {0.05, 0.6960045754424681}, {0.3, 0.49737853414673017}, {1.0, 0.41783078371643023}};
  for (auto [g, ref] : cases) {
    dsp::Waveform y = x;
    for (std::size_t i = 0; i < n; ++i) y.samples[i] = static_cast<float>(x.samples[i] + g * noise[i]);
    EXPECT_NEAR(Stoi(x, y), ref, 1e-6) << g;
  }
}

TEST(Stoi, IdentityIsOne) {
  for (int seed = 0; seed < 5; ++seed) {
    dsp::Waveform x = AddNoise(SpeechLike(24000, seed), 30, seed);
    EXPECT_NEAR(Stoi(x, x), 1.0, 1e-6);
  }
}

TEST(Stoi, DecreasesWithSnr) {
  for (int seed = 0; seed < 20; ++seed) {
    dsp::Waveform x = SpeechLike(32000, seed);
    const double s20 = Stoi(x, AddNoise(x, 20, 100 + seed));
    const double s0 = Stoi(x, AddNoise(x, 0, 100 + seed));
    const double sm10 = Stoi(x, AddNoise(x, -10, 100 + seed));
    EXPECT_GT(s20, s0) << seed;
    EXPECT_GT(s0, sm10) << seed;
  }
}

TEST(Stoi, InvariantToDegradedGain) {
  dsp::Waveform x = SpeechLike(32000, 1), y = AddNoise(x, 5, 2);
  const double base = Stoi(x, y);
  for (double a : {0.1, 0.5, 3.0}) {
    dsp::Waveform z = y;
    for (auto& s : z.samples) s = static_cast<float>(a * s);
    EXPECT_NEAR(Stoi(x, z), base, 1e-6) << a;
  }
}

TEST(Stoi, BoundedForArbitraryInputs) {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    dsp::Waveform x = SpeechLike(16000, seed), y;
    y.samples.resize(x.size());
    for (auto& s : y.samples) s = static_cast<float>(rng.Uniform(-1, 1));
    if (seed % 2) y.samples = x.samples, std::reverse(y.samples.begin(), y.samples.end());
    const double v = Stoi(x, y);
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Stoi, TooShortAfterSilenceRemoval) {
  dsp::Waveform x = SpeechLike(3000, 1);
  EXPECT_THROW(Stoi(x, x), Error);
  dsp::Waveform silent;
  silent.samples.assign(32000, 0.0f);
  silent.samples[100] = 0.5f;
  EXPECT_THROW(Stoi(silent, silent), Error);
}

TEST(Stoi, ThirdOctaveBands) {
  auto bands = ThirdOctaveBands(StoiOptions{});
  ASSERT_EQ(bands.size(), 15u);
  int previous_last = -1;
  for (const auto& band : bands) {
    ASSERT_EQ(band.size(), 257u);
    int first = -1, last = -1;
    for (int k = 0; k < 257; ++k)
      if (band[k] > 0) {
        if (first < 0) first = k;
        last = k;
      }
    // Bands are non-empty, contiguous and do not overlap.
    ASSERT_GE(first, 0);
    EXPECT_GT(first, previous_last);
    previous_last = last;
  }
}

TEST(Sdi, Identities) {
  dsp::Waveform c = SpeechLike(8000, 3), zero = c, twice = c;
  std::fill(zero.samples.begin(), zero.samples.end(), 0.0f);
  for (auto& s : twice.samples) s *= 2.0f;
  EXPECT_NEAR(Sdi(c, c), 0.0, 1e-6);
  EXPECT_NEAR(Sdi(c, zero), 1.0, 1e-6);
  EXPECT_NEAR(Sdi(c, twice), 1.0, 1e-6);
  EXPECT_THROW(Sdi(zero, c), Error);
}

TEST(Sdi, ScaleSensitivity) {
  dsp::Waveform c = SpeechLike(8000, 4);
  for (double a : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    dsp::Waveform e = c;
    for (auto& s : e.samples) s = static_cast<float>(a * s);
    EXPECT_NEAR(Sdi(c, e), (a - 1) * (a - 1), 1e-6) << a;
  }
}

TEST(Sdi, TrimsToCommonLength) {
  dsp::Waveform c = SpeechLike(8000, 5), e = c;
  e.samples.resize(10000, 0.7f);
  EXPECT_NEAR(Sdi(c, e), 0.0, 1e-12);
}

std::filesystem::path WriteText(const std::string& name, const std::string& text) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream os(p);
  os << text;
  return p;
}

const char* kHeader = "utterance_id,noise_type,sir_db,sar_db,method,metric,value\n";

TEST(ScoreStore, EmptyFileGivesNoRecords) {
  ScoreStore s;
  auto rejected = s.ImportCsv(WriteText("avse_empty.csv", kHeader));
  EXPECT_TRUE(rejected.empty());
  EXPECT_EQ(s.size(), 0u);
  ScoreStore t;
  EXPECT_NO_THROW(t.ImportCsv(WriteText("avse_empty2.csv", "")));
  EXPECT_EQ(t.size(), 0u);
}

TEST(ScoreStore, DuplicateKeyLastWins) {
  ScoreStore s;
  s.ImportCsv(WriteText("avse_dup.csv", std::string(kHeader) +
                                            "u1,car,-5,0,avdcnn,pesq,2.1\n"
                                            "u1,car,-5,0,avdcnn,pesq,2.4\n"));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s.records()[0].value, 2.4);
}

TEST(ScoreStore, RejectsInvalidRowsWithLineNumbers) {
  ScoreStore s;
  auto rejected = s.ImportCsv(WriteText("avse_bad.csv", std::string(kHeader) +
                                                            "u1,car,-5,0,avdcnn,stoi,1.5\n"
                                                            "u2,car,-5,0,avdcnn,sdi,-0.1\n"
                                                            "u3,car,x,0,avdcnn,stoi,0.5\n"
                                                            "u4,car,-5,0,avdcnn\n"
                                                            "u5,car,-5,0,avdcnn,mos,3\n"
                                                            "u6,car,-5,0,avdcnn,stoi,0.8\n"));
  ASSERT_EQ(rejected.size(), 5u);
  EXPECT_EQ(rejected[0].line, 2);
  EXPECT_EQ(rejected[3].line, 5);
  EXPECT_EQ(rejected[4].line, 6);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.records()[0].utterance_id, "u6");
}

TEST(ScoreStore, MissingColumnIsAnError) {
  ScoreStore s;
  EXPECT_THROW(s.ImportCsv(WriteText("avse_nocol.csv", "utterance_id,value\nu,1\n")), Error);
}

TEST(ScoreStore, CsvRoundTrip) {
  ScoreStore s;
  ASSERT_TRUE(s.Add({"u1", "car", -5, 0, "avdcnn", "stoi", 0.75}));
  ASSERT_TRUE(s.Add({"u2", "babble", 5, -5, "adcnn", "sdi", 0.3}));
  std::string reason;
  EXPECT_FALSE(s.Add({"u3", "car", 0, 0, "x", "stoi", -2}, &reason));
  EXPECT_FALSE(reason.empty());
  auto p = std::filesystem::temp_directory_path() / "avse_roundtrip.csv";
  s.WriteCsv(p);
  ScoreStore t;
  EXPECT_TRUE(t.ImportCsv(p).empty());
  ASSERT_EQ(t.size(), 2u);
  auto a = s.records(), b = t.records();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].utterance_id, b[i].utterance_id);
    EXPECT_EQ(a[i].value, b[i].value);
  }
}

std::vector<ScoreRecord> Grid(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ScoreRecord> rs;
  int u = 0;
  for (const char* noise : {"car", "babble", "street"})
    for (double sir : {-5.0, 0.0, 5.0})
      for (double sar : {-5.0, 0.0})
        for (const char* method : {"noisy", "adcnn", "avdcnn"})
          for (int k = 0; k < 3; ++k)
            rs.push_back({"u" + std::to_string(u++), noise, sir, sar, method, "stoi", rng.Uniform(0, 1)});
  return rs;
}

TEST(Aggregate, SingleRecordAndMean) {
  auto t = Aggregate({{"u", "car", 0, 0, "m", "stoi", 0.4}}, "stoi", GroupBy::kNoiseType);
  ASSERT_EQ(t.cells.size(), 1u);
  EXPECT_DOUBLE_EQ(t.cells[0][0].mean, 0.4);
  auto t2 = Aggregate({{"u1", "car", 0, 0, "m", "stoi", 0.4}, {"u2", "car", 0, 0, "m", "stoi", 0.6}},
                      "stoi", GroupBy::kNoiseType);
  EXPECT_DOUBLE_EQ(t2.cells[0][0].mean, 0.5);
  EXPECT_EQ(t2.cells[0][0].count, 2u);
}

TEST(Aggregate, GroupingPartitionsRecords) {
  auto rs = Grid(1);
  for (auto g : {GroupBy::kNoiseType, GroupBy::kSir, GroupBy::kSar, GroupBy::kSirSar})
    EXPECT_EQ(Aggregate(rs, "stoi", g).TotalCount(), rs.size());
  auto by_noise = Aggregate(rs, "stoi", GroupBy::kNoiseType, 0.0);
  EXPECT_EQ(by_noise.TotalCount(), rs.size() / 2);
  EXPECT_EQ(by_noise.row_keys.size(), 3u);
  EXPECT_EQ(by_noise.methods, (std::vector<std::string>{"adcnn", "avdcnn", "noisy"}));
  auto by_cond = Aggregate(rs, "stoi", GroupBy::kSirSar);
  EXPECT_EQ(by_cond.row_keys.size(), 6u);
  EXPECT_EQ(by_cond.key_columns, (std::vector<std::string>{"sir_db", "sar_db"}));
  EXPECT_EQ(Aggregate(rs, "pesq", GroupBy::kSir).TotalCount(), 0u);
}

TEST(Aggregate, PermutationInvariantAcrossSeeds) {
  for (int seed = 0; seed < 20; ++seed) {
    auto rs = Grid(seed);
    auto base = Aggregate(rs, "stoi", GroupBy::kSirSar);
    Rng rng(1000 + seed);
    rng.Shuffle(rs);
    auto shuffled = Aggregate(rs, "stoi", GroupBy::kSirSar);
    ASSERT_EQ(base.row_keys, shuffled.row_keys);
    for (std::size_t r = 0; r < base.cells.size(); ++r)
      for (std::size_t m = 0; m < base.cells[r].size(); ++m)
        EXPECT_EQ(base.cells[r][m].mean, shuffled.cells[r][m].mean);
  }
}

TEST(Aggregate, CsvLayout) {
  auto p = std::filesystem::temp_directory_path() / "avse_agg.csv";
  WriteAggregateCsv(p, {Aggregate(Grid(2), "stoi", GroupBy::kNoiseType, 0.0)});
  std::ifstream is(p);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "metric,noise_type,adcnn,avdcnn,noisy");
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  EXPECT_EQ(rows, 3);
}

}  // namespace
}  // namespace avse::metrics
