#ifndef AVSE_TOOLS_COMMANDS_H_
#define AVSE_TOOLS_COMMANDS_H_

#include <string>
#include <vector>

#include "avse/core/kv_config.h"
#include "avse/train/trainer.h"

namespace avse::cli {

// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "AVSE_CONFIG";

struct CommonArgs {
  std::string config;             // empty: $AVSE_CONFIG, then built-in defaults
  std::vector<std::string> sets;  // "key=value" overrides, applied last
  int jobs = 1;
};

KeyValueConfig LoadConfig(const CommonArgs& common);

struct SynthArgs {
  std::string out;
  bool noise = false;  // write interference and ambient noise instead of a corpus
};

struct MixArgs {
  std::string corpus;
  std::string noise;
  std::string ambient;  // empty: <noise>/ambient/ambient.wav
  std::string out;
};

struct FeaturesArgs {
  std::string corpus;
  std::string mix;  // empty: clean-to-clean pairs from the corpus
  std::string out;
  bool audio_only = false;
};

struct TrainArgs {
  std::string features;
  std::string out;
  std::string resume;  // a previous train output directory to continue
};

struct EnhanceArgs {
  std::string model;
  std::string out;
  // Single utterance.
  std::string noisy;
  std::string frames;
  // Whole mixed set.
  std::string mix;
  std::string corpus;
};

struct EvalArgs {
  std::string corpus;
  std::string mix;
  std::vector<std::string> enhanced;  // "method=dir"
  std::vector<std::string> imports;   // external score CSVs
  std::string out;
};

struct SpectrogramArgs {
  std::string wav;
  std::string out;
};

struct SweepMuArgs {
  std::string features;
  std::string out;
};

struct ProbeArgs {
  std::string model;
  std::string mix;
  std::string corpus;
  std::string fake = "closed";  // closed, open or a PPM path
  std::string out;
};

void RunSynth(const CommonArgs& common, const SynthArgs& args);
void RunMix(const CommonArgs& common, const MixArgs& args);
void RunFeatures(const CommonArgs& common, const FeaturesArgs& args);
void RunTrain(const CommonArgs& common, const TrainArgs& args);
void RunEnhance(const CommonArgs& common, const EnhanceArgs& args);
void RunEval(const CommonArgs& common, const EvalArgs& args);
void RunSpectrogram(const CommonArgs& common, const SpectrogramArgs& args);
void RunSweepMu(const CommonArgs& common, const SweepMuArgs& args);
void RunProbe(const CommonArgs& common, const ProbeArgs& args);

// Feature sets written by `features`.
void SaveDataset(const std::string& dir, const train::Dataset& d);
train::Dataset LoadDataset(const std::string& dir);

// Log-power spectrogram as a 257-row image, low frequencies at the bottom,
// [top - range_db, top] mapped to [0, 1] where top is the spectrogram peak
// but never below the log-power floor plus range_db.
Tensor SpectrogramImage(const std::vector<float>& samples, int rate, double range_db = 80.0);

}  // namespace avse::cli

#endif  // AVSE_TOOLS_COMMANDS_H_
