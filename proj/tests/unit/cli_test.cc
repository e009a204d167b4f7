#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "avse/core/checksum.h"
#include "avse/core/csv.h"
#include "avse/core/error.h"
#include "avse/dsp/waveform.h"
#include "avse/visual/ppm.h"
#include "commands.h"
#include "run_manifest.h"

namespace avse::cli {
namespace {

namespace fs = std::filesystem;

const char* kSmallModel =
    "model.conv_a1_filters = 4\nmodel.conv_v1_filters = 4\nmodel.conv_v2_filters = 4\n"
    "model.conv_v3_filters = 4\nmodel.fc1 = 32\nmodel.fc2 = 32\nmodel.fc_a3 = 32\n"
    "model.fc_v3 = 32\ntrain.learning_rate = 0.001\ntrain.batch_size = 32\n"
    "train.early_stop = false\ndata.frame_stride = 4\n";

fs::path Root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / ("avse_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    std::ofstream(p / "small.cfg") << kSmallModel;
    return p;
  }();
  return root;
}

CommonArgs Common(std::vector<std::string> sets = {}) {
  CommonArgs c;
  c.config = (Root() / "small.cfg").string();
  c.sets = std::move(sets);
  return c;
}

std::string P(const std::string& name) { return (Root() / name).string(); }

// Three utterances, two noises, SIR {-5, 0} x SAR {0}: shared by most tests.
struct Pipeline {
  Pipeline() {
    RunSynth(Common({"synth.n_utterances=3"}), {P("corpus"), false});
    RunSynth(Common({"synth.noise_duration_s=5", "synth.noise_talkers=1,2"}), {P("noise"), true});
    RunMix(Common({"mix.sir_db=-5,0", "mix.sar_db=0"}), {P("corpus"), P("noise"), "", P("mix")});
    RunFeatures(Common(), {P("corpus"), P("mix"), P("feat"), false});
  }
};

const Pipeline& Shared() {
  static const Pipeline p;
  return p;
}

std::map<std::string, std::string> DirChecksums(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) m[fs::relative(e.path(), dir).string()] = HexU64(FileChecksum(e.path()));
  return m;
}

int CountManifests(const fs::path& dir) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename() == kManifestName) ++n;
  return n;
}

TEST(Config, SetOverridesFileAndEnvironment) {
  fs::path f = Root() / "env.cfg";
  std::ofstream(f) << "train.mu = 2\ntrain.seed = 5\n";
  ::setenv(kConfigEnv, f.c_str(), 1);
  CommonArgs c;
  c.sets = {"train.mu = 3"};
  KeyValueConfig kv = LoadConfig(c);
  EXPECT_EQ(kv.GetDouble("train.mu", 0), 3.0);
  EXPECT_EQ(kv.GetInt("train.seed", 0), 5);
  ::unsetenv(kConfigEnv);
  EXPECT_FALSE(LoadConfig(CommonArgs{}).Has("train.seed"));
  c.sets = {"novalue"};
  EXPECT_THROW(LoadConfig(c), Error);
}

TEST(Synth, WritesOneWavAndFiftyFramesPerSecond) {
  Shared();
  int wavs = 0;
  for (const auto& e : fs::directory_iterator(P("corpus"))) wavs += e.path().extension() == ".wav";
  EXPECT_EQ(wavs, 3);
  CsvTable t = ReadCsvFile(Root() / "corpus" / "utterances.csv");
  ASSERT_EQ(t.rows.size(), 3u);
  for (const auto& r : t.rows) {
    const double seconds = std::stod(r[1]) / dsp::kSampleRate;
    EXPECT_EQ(std::stoi(r[2]), std::lround(50 * seconds));
    int ppm = 0;
    for (const auto& e : fs::directory_iterator(Root() / "corpus" / r[0])) ppm += e.path().extension() == ".ppm";
    EXPECT_EQ(ppm, std::stoi(r[2]));
  }
  EXPECT_EQ(CountManifests(P("corpus")), 1);
}

TEST(Synth, FixedSeedReproducesArtifactChecksums) {
  Shared();
  RunSynth(Common({"synth.n_utterances=3"}), {P("corpus_again"), false});
  RunManifest a = RunManifest::Read(P("corpus"));
  RunManifest b = RunManifest::Read(P("corpus_again"));
  EXPECT_EQ(a.artifacts, b.artifacts);
  EXPECT_EQ(a.config_hash, b.config_hash);
  EXPECT_EQ(a.artifacts.size(), 3u + 3u * 100u + 1u);
  RunSynth(Common({"synth.n_utterances=3", "synth.seed=2"}), {P("corpus_seed2"), false});
  EXPECT_NE(RunManifest::Read(P("corpus_seed2")).artifacts, a.artifacts);
}

TEST(Mix, GridSizeAndAchievedRatiosLogged) {
  Shared();
  CsvTable t = ReadCsvFile(Root() / "mix" / "mixtures.csv");
  EXPECT_EQ(t.rows.size(), 3u * 2u * 2u * 1u);
  const int want = t.Column("sir_db"), got = t.Column("achieved_sir_db");
  const int want_a = t.Column("sar_db"), got_a = t.Column("achieved_sar_db");
  for (const auto& r : t.rows) {
    EXPECT_NEAR(std::stod(r[got]), std::stod(r[want]), 0.01);
    EXPECT_NEAR(std::stod(r[got_a]), std::stod(r[want_a]), 0.01);
    EXPECT_TRUE(fs::exists(Root() / "mix" / r[0]));
  }
}

TEST(Mix, EmptyNoiseDirectoryIsAnError) {
  Shared();
  fs::create_directories(Root() / "empty_noise");
  EXPECT_THROW(RunMix(Common(), {P("corpus"), P("empty_noise"), "", P("mix_bad")}), Error);
}

TEST(Mix, DoesNotModifyInputs) {
  Shared();
  auto corpus = DirChecksums(P("corpus"));
  auto noise = DirChecksums(P("noise"));
  RunMix(Common({"mix.sir_db=5", "mix.sar_db=5"}), {P("corpus"), P("noise"), "", P("mix_other")});
  EXPECT_EQ(DirChecksums(P("corpus")), corpus);
  EXPECT_EQ(DirChecksums(P("noise")), noise);
}

TEST(Features, TensorsShareTheFrameCount) {
  Shared();
  train::Dataset d = LoadDataset(P("feat"));
  EXPECT_GT(d.size(), 0);
  EXPECT_TRUE(d.has_visual());
  EXPECT_EQ(d.x.dim(1), 257);
  EXPECT_EQ(d.zc.dim(1), 1152);
}

TEST(Train, RerunReproducesChecksumsAndResumeMatchesOneRun) {
  Shared();
  RunTrain(Common({"train.max_epochs=3"}), {P("feat"), P("train_a"), ""});
  RunTrain(Common({"train.max_epochs=3"}), {P("feat"), P("train_b"), ""});
  RunManifest a = RunManifest::Read(P("train_a"));
  EXPECT_EQ(a.artifacts, RunManifest::Read(P("train_b")).artifacts);
  EXPECT_EQ(CountManifests(P("train_a")), 1);

  RunTrain(Common({"train.max_epochs=1"}), {P("feat"), P("train_c1"), ""});
  RunTrain(Common({"train.max_epochs=3"}), {P("feat"), P("train_c"), P("train_c1")});
  RunManifest c = RunManifest::Read(P("train_c"));
  for (const auto& [file, sum] : a.artifacts) EXPECT_EQ(c.artifacts.at(file), sum) << file;
}

TEST(Train, NonFiniteLossThrowsNumericError) {
  Shared();
  EXPECT_THROW(RunTrain(Common({"train.max_epochs=1", "train.learning_rate=1e30"}),
                        {P("feat"), P("train_nan"), ""}),
               NumericError);
}

TEST(Train, AudioOnlyKindsTrainFromAudioFeatures) {
  Shared();
  RunFeatures(Common(), {P("corpus"), P("mix"), P("feat_audio"), true});
  EXPECT_FALSE(LoadDataset(P("feat_audio")).has_visual());
  RunTrain(Common({"train.max_epochs=1", "model.kind=adcnn"}), {P("feat_audio"), P("train_ad"), ""});
  EXPECT_THROW(RunTrain(Common({"train.max_epochs=1"}), {P("feat_audio"), P("train_av_bad"), ""}),
               Error);
}

const fs::path& TrainedModel() {
  static const fs::path p = [] {
    Shared();
    RunTrain(Common({"train.max_epochs=2"}), {P("feat"), P("trained"), ""});
    return Root() / "trained";
  }();
  return p;
}

TEST(Enhance, SingleUtteranceWritesPcmAndMouthFrames) {
  const fs::path model = TrainedModel() / "model";
  CsvTable mixes = ReadCsvFile(Root() / "mix" / "mixtures.csv");
  const std::string file = mixes.rows[0][0], utt = mixes.rows[0][1];
  EnhanceArgs a;
  a.model = model.string();
  a.noisy = (Root() / "mix" / file).string();
  a.frames = (Root() / "corpus" / utt).string();
  a.out = P("enh_one");
  RunEnhance(Common(), a);
  std::ifstream wav(Root() / "enh_one" / "enhanced.wav", std::ios::binary);
  std::string header(44, '\0');
  wav.read(header.data(), 44);
  EXPECT_EQ(header.substr(0, 4), "RIFF");
  EXPECT_EQ(header.substr(8, 4), "WAVE");
  EXPECT_EQ(static_cast<unsigned char>(header[20]), 1);   // PCM
  EXPECT_EQ(static_cast<unsigned char>(header[34]), 16);  // bits per sample
  EXPECT_EQ(dsp::ReadWav(Root() / "enh_one" / "enhanced.wav").size(),
            dsp::ReadWav(a.noisy).size());
  int mouths = 0, diffs = 0;
  for (const auto& e : fs::directory_iterator(Root() / "enh_one" / "mouths")) mouths += e.is_regular_file();
  for (const auto& e : fs::directory_iterator(Root() / "enh_one" / "diff")) diffs += e.is_regular_file();
  const int frames = dsp::ReadWav(a.noisy).size() / 320 - 1;  // STFT frames of a 2 s signal
  EXPECT_EQ(mouths, frames);
  EXPECT_EQ(diffs, mouths);
  Tensor d = visual::ReadPpm(Root() / "enh_one" / "diff" / "frame_00000.ppm");
  for (float v : d.values()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Enhance, RejectsAmbiguousInput) {
  EnhanceArgs a;
  a.model = (TrainedModel() / "model").string();
  a.out = P("enh_bad");
  EXPECT_THROW(RunEnhance(Common(), a), Error);
}

TEST(Eval, MissingEnhancedFileIsSkippedAndTablesGrouped) {
  const fs::path model = TrainedModel() / "model";
  EnhanceArgs a;
  a.model = model.string();
  a.mix = P("mix");
  a.corpus = P("corpus");
  a.out = P("enh_set");
  RunEnhance(Common(), a);
  CsvTable mixes = ReadCsvFile(Root() / "mix" / "mixtures.csv");
  fs::remove(Root() / "enh_set" / mixes.rows[0][0]);
  EvalArgs e{P("corpus"), P("mix"), {"avdcnn=" + P("enh_set")}, {}, P("eval")};
  RunEval(Common(), e);
  CsvTable scores = ReadCsvFile(Root() / "eval" / "scores.csv");
  // 12 mixtures x 2 metrics for noisy, 11 x 2 for the enhanced set.
  EXPECT_EQ(scores.rows.size(), 12u * 2 + 11u * 2);
  CsvTable by_noise = ReadCsvFile(Root() / "eval" / "by_noise_type.csv");
  EXPECT_EQ(by_noise.header, (std::vector<std::string>{"metric", "noise_type", "avdcnn", "noisy"}));
  EXPECT_EQ(by_noise.rows.size(), 2u * 2u);  // metrics x noise types
  CsvTable by_cond = ReadCsvFile(Root() / "eval" / "by_sir_sar.csv");
  EXPECT_EQ(by_cond.header,
            (std::vector<std::string>{"metric", "sir_db", "sar_db", "avdcnn", "noisy"}));
  EXPECT_EQ(by_cond.rows.size(), 2u * 2u);  // metrics x (SIR, SAR) pairs
  EvalArgs bad{P("corpus"), P("mix"), {"avdcnn"}, {}, P("eval_bad")};
  EXPECT_THROW(RunEval(Common(), bad), Error);
}

TEST(Spectrogram, HeightRangeAndSilence) {
  dsp::Waveform silence;
  silence.samples.assign(16000, 0.0f);
  Tensor dark = SpectrogramImage(silence.samples, silence.rate);
  ASSERT_EQ(dark.dim(0), 257);
  for (float v : dark.values()) EXPECT_EQ(v, 0.0f);

  dsp::Waveform tone;
  for (int i = 0; i < 16000; ++i) tone.samples.push_back(0.5f * std::sin(2 * M_PI * 1000.0 * i / 16000));
  Tensor img = SpectrogramImage(tone.samples, tone.rate);
  ASSERT_EQ(img.dim(0), 257);
  // 1 kHz is bin 32; rows run from high to low frequency.
  const int row = 256 - 32;
  EXPECT_FLOAT_EQ(img.at(row, img.dim(1) / 2), 1.0f);
  float lo = 1.0f;
  for (float v : img.values()) lo = std::min(lo, v);
  EXPECT_EQ(lo, 0.0f);  // far bins sit more than 80 dB down and clip

  const fs::path wav = Root() / "tone.wav";
  dsp::WriteWav(wav, tone);
  RunSpectrogram(Common(), {wav.string(), P("spec")});
  Tensor back = visual::ReadPgm(Root() / "spec" / "tone.pgm");
  EXPECT_EQ(back.dims(), img.dims());
}

TEST(SweepMu, WritesOneRowPerMu) {
  Shared();
  RunSweepMu(Common({"train.max_epochs=1", "sweep.mu=0,1"}), {P("feat"), P("sweep")});
  CsvTable t = ReadCsvFile(Root() / "sweep" / "mu_sweep.csv");
  EXPECT_EQ(t.rows.size(), 2u);
}

TEST(Probe, WritesPerMixtureRowsAndMean) {
  ProbeArgs a{(TrainedModel() / "model").string(), P("mix"), P("corpus"), "closed", P("probe")};
  RunProbe(Common(), a);
  CsvTable t = ReadCsvFile(Root() / "probe" / "probe.csv");
  EXPECT_EQ(t.rows.size(), 12u + 1u);
  EXPECT_EQ(t.rows.back()[0], "mean");
  a.fake = P("missing.ppm");
  EXPECT_THROW(RunProbe(Common(), a), Error);
}

int RunBinary(const std::string& args) {
  const std::string cmd = std::string(AVSE_BINARY) + " -q " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Binary, ExitCodes) {
  Shared();
  const std::string cfg = " -c " + P("small.cfg");
  EXPECT_EQ(RunBinary("spectrogram" + cfg + " --wav " + P("corpus/utt0000.wav") + " -o " + P("bin_spec")), 0);
  EXPECT_EQ(RunBinary("train" + cfg + " --features " + P("feat") + " -o " + P("bin_nan") +
                " -s train.max_epochs=1 -s train.learning_rate=1e30"),
            3);
  EXPECT_NE(RunBinary("mix" + cfg + " --corpus " + P("corpus") + " --noise " + P("empty_noise") + " -o " +
                P("bin_mix")),
            0);
  EXPECT_NE(RunBinary("train --kind nosuch --features " + P("feat") + " -o " + P("bin_kind")), 0);
  EXPECT_NE(RunBinary(""), 0);
}

}  // namespace
}  // namespace avse::cli
