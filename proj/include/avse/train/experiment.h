#ifndef AVSE_TRAIN_EXPERIMENT_H_
#define AVSE_TRAIN_EXPERIMENT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "avse/core/kv_config.h"
#include "avse/train/probe.h"
#include "avse/train/trainer.h"
#include "avse/visual/synth.h"

namespace avse::train {

// A synthetic train/test split: each clean utterance is mixed with its own
// interfering talker(s) and ambient noise at fixed SIR/SAR.
struct ExperimentSpec {
  int n_train = 50;
  int n_test = 10;
  double duration_s = 2.0;
  double sir_db = -5.0;
  double sar_db = 10.0;
  int talkers = 1;
  int frame_stride = 1;
  std::uint64_t seed = 1;
  double articulation_rate_hz = 4.0;
  double carrier_hz = 140.0;
  // Recording noise of the clean utterances; keeps silent bins above the
  // log-power floor.
  double noise_floor = 1e-3;

  void Validate() const;
  // Reads `data.*` keys.
  static ExperimentSpec FromKeyValue(const KeyValueConfig& kv);
  visual::SynthCorpusSpec Corpus() const;
};

struct ExperimentData {
  Dataset train;
  std::vector<TestUtterance> test;
};

ExperimentData BuildExperiment(const ExperimentSpec& spec);

// Mixes clean utterance `index` of the corpus the way BuildExperiment does.
TestUtterance MixUtterance(const ExperimentSpec& spec, const visual::SynthUtterance& u, int index);

}  // namespace avse::train

#endif  // AVSE_TRAIN_EXPERIMENT_H_
