#include "avse/train/experiment.h"

#include <cmath>

#include "avse/core/error.h"
#include "avse/core/rng.h"
#include "avse/dsp/mixing.h"
#include "avse/model/enhance.h"

namespace avse::train {

namespace {

constexpr std::uint64_t kInterferenceStream = 500;
constexpr std::uint64_t kAmbientStream = 600;
constexpr std::uint64_t kMixStream = 700;

}  // namespace

void ExperimentSpec::Validate() const {
  if (n_train < 1 || n_test < 0) throw Error("data: need at least one training utterance");
  if (talkers < 1) throw Error("data.talkers must be positive");
  if (frame_stride < 1) throw Error("data.frame_stride must be positive");
  if (!std::isfinite(sir_db) || !std::isfinite(sar_db)) throw Error("data: SIR/SAR must be finite");
  Corpus().Validate();
}

ExperimentSpec ExperimentSpec::FromKeyValue(const KeyValueConfig& kv) {
  ExperimentSpec s;
  s.n_train = static_cast<int>(kv.GetInt("data.n_train", s.n_train));
  s.n_test = static_cast<int>(kv.GetInt("data.n_test", s.n_test));
  s.duration_s = kv.GetDouble("data.duration_s", s.duration_s);
  s.sir_db = kv.GetDouble("data.sir_db", s.sir_db);
  s.sar_db = kv.GetDouble("data.sar_db", s.sar_db);
  s.talkers = static_cast<int>(kv.GetInt("data.talkers", s.talkers));
  s.frame_stride = static_cast<int>(kv.GetInt("data.frame_stride", s.frame_stride));
  s.seed = static_cast<std::uint64_t>(kv.GetInt("data.seed", static_cast<std::int64_t>(s.seed)));
  s.articulation_rate_hz = kv.GetDouble("data.articulation_rate_hz", s.articulation_rate_hz);
  s.carrier_hz = kv.GetDouble("data.carrier_hz", s.carrier_hz);
  s.noise_floor = kv.GetDouble("data.noise_floor", s.noise_floor);
  s.Validate();
  return s;
}

visual::SynthCorpusSpec ExperimentSpec::Corpus() const {
  visual::SynthCorpusSpec c;
  c.n_utterances = n_train + n_test;
  c.duration_s = duration_s;
  c.seed = seed;
  c.articulation_rate_hz = articulation_rate_hz;
  c.carrier_hz = carrier_hz;
  c.noise_floor = noise_floor;
  return c;
}

TestUtterance MixUtterance(const ExperimentSpec& spec, const visual::SynthUtterance& u, int index) {
  const visual::SynthCorpusSpec corpus = spec.Corpus();
  const double noise_s = 2.0 * spec.duration_s;
  const std::uint64_t i = static_cast<std::uint64_t>(index);
  dsp::Waveform interf = visual::SynthTalkerNoise(
      corpus, noise_s, spec.talkers, Rng::Derive(spec.seed, kInterferenceStream + i).NextU64());
  dsp::Waveform ambient =
      visual::SynthAmbientNoise(noise_s, Rng::Derive(spec.seed, kAmbientStream + i).NextU64());
  dsp::MixSpec mix{spec.sir_db, spec.sar_db, "talker", "ambient",
                   Rng::Derive(spec.seed, kMixStream + i).NextU64()};
  TestUtterance t;
  t.id = u.id;
  t.clean = u.audio;
  t.noisy = dsp::MixSirSar(u.audio, interf, ambient, mix).noisy;
  t.frames = u.frames;
  return t;
}

ExperimentData BuildExperiment(const ExperimentSpec& spec) {
  spec.Validate();
  const visual::SynthCorpusSpec corpus = spec.Corpus();
  ExperimentData d;
  std::vector<model::UtteranceFeatures> feats;
  for (int i = 0; i < corpus.n_utterances; ++i) {
    visual::SynthUtterance u = visual::SynthesizeUtterance(corpus, i);
    TestUtterance t = MixUtterance(spec, u, i);
    if (i < spec.n_train) {
      feats.push_back(model::PrepareUtterance(t.noisy, &t.frames, &t.clean));
    } else {
      d.test.push_back(std::move(t));
    }
  }
  d.train = BuildDataset(feats, spec.frame_stride);
  return d;
}

}  // namespace avse::train
