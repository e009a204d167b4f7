#include "commands.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "avse/core/csv.h"
#include "avse/core/error.h"
#include "avse/core/parallel.h"
#include "avse/core/rng.h"
#include "avse/core/tnsr.h"
#include "avse/dsp/mixing.h"
#include "avse/dsp/stft.h"
#include "avse/dsp/waveform.h"
#include "avse/metrics/objective.h"
#include "avse/metrics/scores.h"
#include "avse/model/enhance.h"
#include "avse/train/probe.h"
#include "avse/visual/ppm.h"
#include "avse/visual/synth.h"
#include "run_manifest.h"

namespace avse::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kUtteranceList = "utterances.csv";
constexpr const char* kMixtureList = "mixtures.csv";
constexpr const char* kTrainLog = "train_log.csv";
constexpr const char* kModelDir = "model";
constexpr const char* kStateDir = "state";
constexpr std::uint64_t kNoiseStream = 900;

void PrepareOutput(const fs::path& dir) {
  fs::create_directories(dir);
  if (fs::exists(dir / kManifestName)) fs::remove(dir / kManifestName);
}

void RequireDir(const std::string& path, const std::string& what) {
  if (path.empty()) throw Error(what + " directory not given");
  if (!fs::is_directory(path)) throw Error(what + " directory " + path + " does not exist");
}

std::uint64_t Seed(const KeyValueConfig& kv, const std::string& key) {
  return static_cast<std::uint64_t>(kv.GetInt(key, 1));
}

visual::SynthCorpusSpec CorpusSpec(const KeyValueConfig& kv) {
  visual::SynthCorpusSpec s;
  s.n_utterances = static_cast<int>(kv.GetInt("synth.n_utterances", 60));
  s.duration_s = kv.GetDouble("synth.duration_s", 2.0);
  s.seed = Seed(kv, "synth.seed");
  s.articulation_rate_hz = kv.GetDouble("synth.articulation_rate_hz", s.articulation_rate_hz);
  s.carrier_hz = kv.GetDouble("synth.carrier_hz", s.carrier_hz);
  s.noise_floor = kv.GetDouble("synth.noise_floor", 1e-3);
  s.Validate();
  return s;
}

std::vector<std::string> UtteranceIds(const fs::path& corpus) {
  CsvTable t = ReadCsvFile(corpus / kUtteranceList);
  const int c = t.Column("id");
  if (c < 0) throw Error((corpus / kUtteranceList).string() + ": no id column");
  std::vector<std::string> ids;
  for (const auto& r : t.rows) ids.push_back(r.at(c));
  return ids;
}

struct Mixture {
  std::string file;
  std::string utterance_id;
  std::string noise_type;
  double sir_db = 0.0;
  double sar_db = 0.0;
};

std::vector<Mixture> ReadMixtures(const fs::path& dir) {
  CsvTable t = ReadCsvFile(dir / kMixtureList);
  const int cf = t.Column("file"), cu = t.Column("utterance_id"), cn = t.Column("noise_type"),
            ci = t.Column("sir_db"), ca = t.Column("sar_db");
  if (cf < 0 || cu < 0 || cn < 0 || ci < 0 || ca < 0)
    throw Error((dir / kMixtureList).string() + ": not a mixture list");
  std::vector<Mixture> out;
  for (const auto& r : t.rows)
    out.push_back({r.at(cf), r.at(cu), r.at(cn), std::stod(r.at(ci)), std::stod(r.at(ca))});
  return out;
}

std::string DbTag(double v) {
  std::string s = FormatDouble(v);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

void WriteTrainHeader(std::map<std::string, std::string>& h, const train::TrainLog& log,
                      const train::TrainConfig& tc) {
  h["run.best_epoch"] = std::to_string(log.best_epoch);
  h["run.stopped_early"] = log.stopped_early ? "1" : "0";
  h["run.initial_loss"] = FormatDouble(log.initial_loss);
  h["run.epochs"] = log.epochs.empty() ? "0" : std::to_string(log.epochs.back().epoch);
  for (const auto& [k, v] : tc.ToMap()) h["train." + k] = v;
}

std::vector<Tensor> ParameterValues(model::Model& m) {
  std::vector<Tensor> v;
  for (nn::Parameter<float>* p : m.Parameters()) v.push_back(p->value);
  return v;
}

void SaveTrainOutputs(const fs::path& out, model::Model& m, const train::TrainResult& r,
                      const train::TrainConfig& tc) {
  std::map<std::string, std::string> header;
  WriteTrainHeader(header, r.log, tc);
  model::SaveModel(out / kModelDir, m, header);
  model::Model last(m.config());
  auto lp = last.Parameters();
  for (std::size_t i = 0; i < lp.size(); ++i) lp[i]->value = r.last_values[i];
  model::SaveModel(out / kStateDir, last, header, train::OptimizerTensors(last, r.optimizer));
  r.log.WriteCsv(out / kTrainLog);
}

visual::MouthImage FakeMouth(const std::string& spec) {
  if (spec == "closed") return visual::RenderMouth(0.0);
  if (spec == "open") return visual::RenderMouth(1.0);
  visual::MouthImage img;
  img.pixels = visual::ReadPpm(spec);
  if (img.pixels.dims() != Dims{visual::kMouthHeight, visual::kMouthWidth, visual::kMouthChannels})
    throw Error(spec + ": fake mouth image must be " + std::to_string(visual::kMouthWidth) + "x" +
                std::to_string(visual::kMouthHeight));
  return img;
}

std::vector<model::Model> LoadModels(const std::string& dir, int jobs) {
  std::vector<model::Model> models;
  for (int j = 0; j < std::max(1, jobs); ++j) models.push_back(model::LoadModel(dir));
  return models;
}

// Splits [0, n) into `jobs` contiguous chunks so each worker owns one model.
void ForChunks(std::size_t n, int jobs, const std::function<void(int, std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs, n));
  ParallelFor(workers, static_cast<int>(workers), [&](std::size_t w) {
    for (std::size_t i = w; i < n; i += workers) fn(static_cast<int>(w), i);
  });
}

}  // namespace

// --- config ---

KeyValueConfig LoadConfig(const CommonArgs& common) {
  std::string path = common.config;
  if (path.empty()) {
    const char* env = std::getenv(kConfigEnv);
    if (env && *env) path = env;
  }
  KeyValueConfig kv = path.empty() ? KeyValueConfig{} : KeyValueConfig::ReadFile(path);
  for (const std::string& s : common.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("--set expects key=value, got '" + s + "'");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t"), e = v.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    kv.Set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  return kv;
}

// --- synth ---

void RunSynth(const CommonArgs& common, const SynthArgs& args) {
  if (args.out.empty()) throw Error("synth: --out is required");
  const KeyValueConfig kv = LoadConfig(common);
  const visual::SynthCorpusSpec spec = CorpusSpec(kv);
  const fs::path out(args.out);
  PrepareOutput(out);
  RunManifest manifest = BeginRun(args.noise ? "synth --noise" : "synth", kv.Hash(), spec.seed, {}, out);

  if (args.noise) {
    const double dur = kv.GetDouble("synth.noise_duration_s", 10.0);
    const std::vector<double> talkers = kv.GetDoubleList("synth.noise_talkers", {1, 2, 6});
    ParallelFor(talkers.size() + 1, common.jobs, [&](std::size_t k) {
      const std::uint64_t seed = Rng::Derive(spec.seed, kNoiseStream + k).NextU64();
      if (k == talkers.size()) {
        fs::create_directories(out / "ambient");
        dsp::WriteWav(out / "ambient" / "ambient.wav", visual::SynthAmbientNoise(dur, seed));
        return;
      }
      const int n = static_cast<int>(talkers[k]);
      if (n < 1 || n != talkers[k]) throw Error("synth.noise_talkers must be positive integers");
      dsp::WriteWav(out / ("talkers" + std::to_string(n) + ".wav"),
                    visual::SynthTalkerNoise(spec, dur, n, seed));
    });
    Info("wrote " + std::to_string(talkers.size()) + " interference noises and one ambient noise to " +
         out.string());
  } else {
    std::vector<std::string> ids(spec.n_utterances);
    std::vector<std::size_t> samples(spec.n_utterances), frames(spec.n_utterances);
    ParallelFor(spec.n_utterances, common.jobs, [&](std::size_t i) {
      visual::SynthUtterance u = visual::SynthesizeUtterance(spec, static_cast<int>(i));
      dsp::WriteWav(out / (u.id + ".wav"), u.audio);
      visual::WriteFrameSequence(out / u.id, u.frames);
      ids[i] = u.id;
      samples[i] = u.audio.size();
      frames[i] = u.frames.size();
    });
    CsvTable t;
    t.header = {"id", "samples", "frames"};
    for (int i = 0; i < spec.n_utterances; ++i)
      t.rows.push_back({ids[i], std::to_string(samples[i]), std::to_string(frames[i])});
    WriteCsvFile(out / kUtteranceList, t);
    Info("wrote " + std::to_string(spec.n_utterances) + " utterances to " + out.string());
  }
  manifest.Finalize();
}

// --- mix ---

void RunMix(const CommonArgs& common, const MixArgs& args) {
  RequireDir(args.corpus, "corpus");
  RequireDir(args.noise, "noise");
  if (args.out.empty()) throw Error("mix: --out is required");
  const KeyValueConfig kv = LoadConfig(common);
  const std::vector<double> sirs = kv.GetDoubleList("mix.sir_db", {-5, 0, 5});
  const std::vector<double> sars = kv.GetDoubleList("mix.sar_db", {-5, 0, 5});
  if (sirs.empty() || sars.empty()) throw Error("mix: empty SIR or SAR list");
  const std::uint64_t seed = Seed(kv, "mix.seed");

  std::vector<fs::path> noises;
  for (const auto& e : fs::directory_iterator(args.noise))
    if (e.is_regular_file() && e.path().extension() == ".wav") noises.push_back(e.path());
  std::sort(noises.begin(), noises.end());
  if (noises.empty()) throw Error("mix: no .wav noise files in " + args.noise);
  const fs::path ambient_path =
      args.ambient.empty() ? fs::path(args.noise) / "ambient" / "ambient.wav" : fs::path(args.ambient);
  if (!fs::exists(ambient_path)) throw Error("mix: ambient noise " + ambient_path.string() + " not found");
  const dsp::Waveform ambient = dsp::ReadWav(ambient_path);
  std::vector<dsp::Waveform> noise_wavs;
  for (const auto& p : noises) noise_wavs.push_back(dsp::ReadWav(p));

  const std::vector<std::string> ids = UtteranceIds(args.corpus);
  const fs::path out(args.out);
  PrepareOutput(out);
  RunManifest manifest = BeginRun("mix", kv.Hash(), seed,
                                  {args.corpus, args.noise, ambient_path.string()}, out);

  struct Job {
    Mixture m;
    int noise = 0;
    double achieved_sir = 0.0, achieved_sar = 0.0;
  };
  std::vector<Job> jobs;
  for (const auto& id : ids)
    for (std::size_t n = 0; n < noises.size(); ++n)
      for (double sir : sirs)
        for (double sar : sars) {
          Job j;
          const std::string noise = noises[n].stem().string();
          j.m = {id + "__" + noise + "__sir" + DbTag(sir) + "__sar" + DbTag(sar) + ".wav", id, noise,
                 sir, sar};
          j.noise = static_cast<int>(n);
          jobs.push_back(j);
        }
  ParallelFor(jobs.size(), common.jobs, [&](std::size_t i) {
    Job& j = jobs[i];
    const dsp::Waveform clean = dsp::ReadWav(fs::path(args.corpus) / (j.m.utterance_id + ".wav"));
    dsp::MixSpec spec{j.m.sir_db, j.m.sar_db, j.m.noise_type, "ambient",
                      Rng::Derive(seed, i).NextU64()};
    dsp::MixResult r = dsp::MixSirSar(clean, noise_wavs[j.noise], ambient, spec);
    dsp::WriteWav(out / j.m.file, r.noisy);
    j.achieved_sir = r.achieved_sir_db;
    j.achieved_sar = r.achieved_sar_db;
  });
  CsvTable t;
  t.header = {"file", "utterance_id", "noise_type", "sir_db", "sar_db", "achieved_sir_db",
              "achieved_sar_db"};
  for (const Job& j : jobs) {
    Info(j.m.file + ": SIR " + FormatDouble(j.achieved_sir) + " dB, SAR " +
         FormatDouble(j.achieved_sar) + " dB");
    t.rows.push_back({j.m.file, j.m.utterance_id, j.m.noise_type, FormatDouble(j.m.sir_db),
                      FormatDouble(j.m.sar_db), FormatDouble(j.achieved_sir),
                      FormatDouble(j.achieved_sar)});
  }
  WriteCsvFile(out / kMixtureList, t);
  Info("wrote " + std::to_string(jobs.size()) + " mixtures (" + std::to_string(ids.size()) +
       " utterances x " + std::to_string(noises.size()) + " noises x " + std::to_string(sirs.size()) +
       " SIRs x " + std::to_string(sars.size()) + " SARs)");
  manifest.Finalize();
}

// --- features ---

void SaveDataset(const std::string& dir, const train::Dataset& d) {
  const fs::path p(dir);
  fs::create_directories(p);
  WriteTnsrFile(p / "x.tnsr", d.x);
  WriteTnsrFile(p / "y.tnsr", d.y);
  if (d.has_visual()) {
    WriteTnsrFile(p / "z.tnsr", d.z);
    WriteTnsrFile(p / "zc.tnsr", d.zc);
  }
}

train::Dataset LoadDataset(const std::string& dir) {
  RequireDir(dir, "features");
  const fs::path p(dir);
  train::Dataset d;
  d.x = ReadTnsrFile(p / "x.tnsr");
  d.y = ReadTnsrFile(p / "y.tnsr");
  if (fs::exists(p / "z.tnsr")) {
    d.z = ReadTnsrFile(p / "z.tnsr");
    d.zc = ReadTnsrFile(p / "zc.tnsr");
  }
  const int n = d.size();
  if (d.y.dim(0) != n || (d.has_visual() && (d.z.dim(0) != n || d.zc.dim(0) != n)))
    throw Error(dir + ": feature tensors disagree on the frame count");
  return d;
}

void RunFeatures(const CommonArgs& common, const FeaturesArgs& args) {
  RequireDir(args.corpus, "corpus");
  if (args.out.empty()) throw Error("features: --out is required");
  const KeyValueConfig kv = LoadConfig(common);
  const int stride = static_cast<int>(kv.GetInt("data.frame_stride", 1));
  struct Pair {
    std::string noisy;
    std::string utterance_id;
  };
  std::vector<Pair> pairs;
  if (args.mix.empty()) {
    for (const auto& id : UtteranceIds(args.corpus))
      pairs.push_back({(fs::path(args.corpus) / (id + ".wav")).string(), id});
  } else {
    RequireDir(args.mix, "mix");
    for (const Mixture& m : ReadMixtures(args.mix))
      pairs.push_back({(fs::path(args.mix) / m.file).string(), m.utterance_id});
  }
  const fs::path out(args.out);
  PrepareOutput(out);
  RunManifest manifest = BeginRun("features", kv.Hash(), 0,
                                  {args.corpus, args.mix.empty() ? "(clean pairs)" : args.mix}, out);
  std::vector<model::UtteranceFeatures> feats(pairs.size());
  ParallelFor(pairs.size(), common.jobs, [&](std::size_t i) {
    const fs::path base = fs::path(args.corpus) / pairs[i].utterance_id;
    const dsp::Waveform clean = dsp::ReadWav(base.string() + ".wav");
    const dsp::Waveform noisy = dsp::ReadWav(pairs[i].noisy);
    std::vector<visual::MouthImage> frames;
    if (!args.audio_only) frames = visual::ReadFrameSequence(base);
    feats[i] = model::PrepareUtterance(noisy, args.audio_only ? nullptr : &frames, &clean);
  });
  train::Dataset d = train::BuildDataset(feats, stride);
  SaveDataset(args.out, d);
  Info("wrote " + std::to_string(d.size()) + " frames from " + std::to_string(pairs.size()) +
       " utterances");
  manifest.Finalize();
}

// --- train ---

void RunTrain(const CommonArgs& common, const TrainArgs& args) {
  if (args.out.empty()) throw Error("train: --out is required");
  const KeyValueConfig kv = LoadConfig(common);
  const train::TrainConfig tc = train::TrainConfig::FromKeyValue(kv);
  const train::Dataset data = LoadDataset(args.features);
  const fs::path out(args.out);

  std::optional<train::ResumeState> resume;
  std::optional<model::Model> m;
  if (!args.resume.empty()) {
    RequireDir(args.resume, "resume");
    const fs::path from(args.resume);
    nn::Checkpoint head, raw;
    m.emplace(model::LoadModel(from / kModelDir, &head));
    model::Model state = model::LoadModel(from / kStateDir, &raw);
    train::ResumeState rs;
    rs.log = train::TrainLog::ReadCsv(from / kTrainLog);
    rs.log.initial_loss = std::stod(head.header.at("run.initial_loss"));
    rs.optimizer = train::RestoreOptimizer(state, raw);
    rs.last_values = ParameterValues(state);
    const int done = rs.log.epochs.empty() ? 0 : rs.log.epochs.back().epoch;
    Info("resuming after epoch " + std::to_string(done) + " of " + std::to_string(tc.max_epochs));
    resume = std::move(rs);
  } else {
    model::ModelConfig mc = model::ModelConfig::FromKeyValue(kv);
    m.emplace(mc);
    m->Initialize(Seed(kv, "model.seed"));
  }
  PrepareOutput(out);
  std::vector<std::string> inputs = {args.features};
  if (!args.resume.empty()) inputs.push_back(args.resume);
  RunManifest manifest = BeginRun("train", kv.Hash(), tc.seed, inputs, out);
  auto report = [](const train::EpochRecord& e) {
    Info("epoch " + std::to_string(e.epoch) + " [" + train::InputTypeName(e.input) + "] total " +
         FormatDouble(e.total) + " audio " + FormatDouble(e.audio) + " visual " +
         FormatDouble(e.visual));
  };
  train::TrainResult r = train::Train(*m, data, tc, report, resume ? &*resume : nullptr);
  SaveTrainOutputs(out, *m, r, tc);
  Info("trained " + std::to_string(r.epochs_run) + " epochs; selected epoch " +
       std::to_string(r.log.best_epoch) + (r.log.stopped_early ? " (stopped early)" : ""));
  manifest.Finalize();
}

// --- enhance ---

void RunEnhance(const CommonArgs& common, const EnhanceArgs& args) {
  if (args.out.empty()) throw Error("enhance: --out is required");
  RequireDir(args.model, "model");
  const KeyValueConfig kv = LoadConfig(common);
  const fs::path out(args.out);
  const bool batch = !args.mix.empty();
  if (batch == !args.noisy.empty()) throw Error("enhance: give either --noisy or --mix");

  if (!batch) {
    model::Model m = model::LoadModel(args.model);
    const dsp::Waveform noisy = dsp::ReadWav(args.noisy);
    std::vector<visual::MouthImage> frames;
    if (m.uses_visual_input()) {
      if (args.frames.empty()) throw Error("enhance: the model needs --frames");
      frames = visual::ReadFrameSequence(args.frames);
    }
    PrepareOutput(out);
    RunManifest manifest = BeginRun("enhance", kv.Hash(), 0,
                                    {args.model, args.noisy, args.frames}, out);
    model::EnhanceResult r = model::EnhanceUtterance(m, noisy, frames);
    dsp::WriteWav(out / "enhanced.wav", r.enhanced);
    if (!r.mouths.empty()) {
      visual::WriteFrameSequence(out / "mouths", r.mouths);
      std::vector<visual::MouthImage> diffs(r.mouths.size());
      for (std::size_t t = 0; t < r.mouths.size(); ++t) {
        auto o = r.mouths[t].pixels.values();
        auto in = frames[t].pixels.values();
        auto d = diffs[t].pixels.values();
        for (std::size_t k = 0; k < d.size(); ++k)
          d[k] = std::clamp(0.5f + 10.0f * (o[k] - in[k]), 0.0f, 1.0f);
      }
      visual::WriteFrameSequence(out / "diff", diffs);
    }
    Info("enhanced " + args.noisy + " (" + std::to_string(r.mouths.size()) + " mouth frames)");
    manifest.Finalize();
    return;
  }

  RequireDir(args.mix, "mix");
  const std::vector<Mixture> mixtures = ReadMixtures(args.mix);
  std::vector<model::Model> models = LoadModels(args.model, common.jobs);
  if (models[0].uses_visual_input()) RequireDir(args.corpus, "corpus");
  PrepareOutput(out);
  RunManifest manifest = BeginRun("enhance", kv.Hash(), 0, {args.model, args.mix, args.corpus}, out);
  ForChunks(mixtures.size(), common.jobs, [&](int w, std::size_t i) {
    const Mixture& mx = mixtures[i];
    const dsp::Waveform noisy = dsp::ReadWav(fs::path(args.mix) / mx.file);
    std::vector<visual::MouthImage> frames;
    if (models[w].uses_visual_input())
      frames = visual::ReadFrameSequence(fs::path(args.corpus) / mx.utterance_id);
    dsp::WriteWav(out / mx.file, model::EnhanceUtterance(models[w], noisy, frames).enhanced);
  });
  Info("enhanced " + std::to_string(mixtures.size()) + " mixtures");
  manifest.Finalize();
}

// --- eval ---

void RunEval(const CommonArgs& common, const EvalArgs& args) {
  RequireDir(args.corpus, "corpus");
  RequireDir(args.mix, "mix");
  if (args.out.empty()) throw Error("eval: --out is required");
  const KeyValueConfig kv = LoadConfig(common);
  std::vector<std::pair<std::string, fs::path>> methods = {{"noisy", fs::path(args.mix)}};
  for (const std::string& e : args.enhanced) {
    const auto eq = e.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == e.size())
      throw Error("--enhanced expects method=dir, got '" + e + "'");
    methods.emplace_back(e.substr(0, eq), e.substr(eq + 1));
    RequireDir(methods.back().second.string(), "enhanced");
  }
  const std::vector<Mixture> mixtures = ReadMixtures(args.mix);
  const fs::path out(args.out);
  PrepareOutput(out);
  std::vector<std::string> inputs = {args.corpus, args.mix};
  for (const auto& e : args.enhanced) inputs.push_back(e);
  for (const auto& e : args.imports) inputs.push_back(e);
  RunManifest manifest = BeginRun("eval", kv.Hash(), 0, inputs, out);

  struct Cell {
    bool present = false;
    double stoi = 0.0, sdi = 0.0;
  };
  std::vector<Cell> cells(mixtures.size() * methods.size());
  ParallelFor(mixtures.size(), common.jobs, [&](std::size_t i) {
    const Mixture& mx = mixtures[i];
    const dsp::Waveform clean = dsp::ReadWav(fs::path(args.corpus) / (mx.utterance_id + ".wav"));
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const fs::path p = methods[k].second / mx.file;
      if (!fs::exists(p)) continue;
      const dsp::Waveform w = dsp::ReadWav(p);
      Cell& c = cells[i * methods.size() + k];
      c.stoi = metrics::Stoi(clean, w);
      c.sdi = metrics::Sdi(clean, w);
      c.present = true;
    }
  });
  metrics::ScoreStore store;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < mixtures.size(); ++i) {
    const Mixture& mx = mixtures[i];
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const Cell& c = cells[i * methods.size() + k];
      if (!c.present) {
        Warn("eval: " + (methods[k].second / mx.file).string() + " missing; row skipped");
        ++skipped;
        continue;
      }
      for (auto [metric, v] : {std::pair{"stoi", c.stoi}, std::pair{"sdi", c.sdi}}) {
        std::string reason;
        if (!store.Add({mx.utterance_id, mx.noise_type, mx.sir_db, mx.sar_db, methods[k].first,
                        metric, v},
                       &reason))
          Warn("eval: " + mx.file + " " + metric + ": " + reason);
      }
    }
  }
  for (const std::string& csv : args.imports) store.ImportCsv(csv);
  store.WriteCsv(out / "scores.csv");

  const std::vector<metrics::ScoreRecord> records = store.records();
  std::set<std::string> metric_names;
  for (const auto& r : records) metric_names.insert(r.metric);
  const double table_sar = kv.GetDouble("eval.noise_table_sar_db", 0.0);
  std::vector<metrics::AggregateTable> by_noise, by_sir_sar;
  for (const std::string& metric : metric_names) {
    metrics::AggregateTable t = metrics::Aggregate(records, metric, metrics::GroupBy::kNoiseType, table_sar);
    if (t.TotalCount() == 0)
      Warn("eval: no " + metric + " scores at SAR " + FormatDouble(table_sar) + " dB");
    by_noise.push_back(t);
    by_sir_sar.push_back(metrics::Aggregate(records, metric, metrics::GroupBy::kSirSar));
  }
  metrics::WriteAggregateCsv(out / "by_noise_type.csv", by_noise);
  metrics::WriteAggregateCsv(out / "by_sir_sar.csv", by_sir_sar);
  Info("scored " + std::to_string(records.size()) + " records" +
       (skipped ? ", skipped " + std::to_string(skipped) + " missing files" : ""));
  manifest.Finalize();
}

// --- spectrogram ---

Tensor SpectrogramImage(const std::vector<float>& samples, int rate, double range_db) {
  if (!(range_db > 0.0)) throw Error("spectrogram range must be positive");
  dsp::Waveform w;
  w.samples = samples;
  w.rate = rate;
  const dsp::SpectroFrames f = dsp::Stft(w);
  const int t = f.num_frames(), bins = dsp::kNumBins;
  const double to_db = 10.0 / std::log(10.0);
  double peak = -std::numeric_limits<double>::infinity();
  for (float v : f.logpow.values()) peak = std::max(peak, to_db * v);
  const double top = std::max(peak, to_db * std::log(dsp::kLogPowerFloor) + range_db);
  Tensor img(Dims{bins, t});
  for (int j = 0; j < t; ++j)
    for (int k = 0; k < bins; ++k) {
      const double db = to_db * f.logpow.at(j, k);
      img.at(bins - 1 - k, j) = static_cast<float>(std::clamp((db - (top - range_db)) / range_db, 0.0, 1.0));
    }
  return img;
}

void RunSpectrogram(const CommonArgs& common, const SpectrogramArgs& args) {
  if (args.wav.empty() || args.out.empty()) throw Error("spectrogram: --wav and --out are required");
  const KeyValueConfig kv = LoadConfig(common);
  const dsp::Waveform w = dsp::ReadWav(args.wav);
  const fs::path out(args.out);
  PrepareOutput(out);
  RunManifest manifest = BeginRun("spectrogram", kv.Hash(), 0, {args.wav}, out);
  const Tensor img = SpectrogramImage(w.samples, w.rate, kv.GetDouble("spectrogram.range_db", 80.0));
  visual::WritePgm(out / (fs::path(args.wav).stem().string() + ".pgm"), img);
  manifest.Finalize();
}

// --- sweep-mu ---

void RunSweepMu(const CommonArgs& common, const SweepMuArgs& args) {
  if (args.out.empty()) throw Error("sweep-mu: --out is required");
  const KeyValueConfig kv = LoadConfig(common);
  const train::TrainConfig tc = train::TrainConfig::FromKeyValue(kv);
  const model::ModelConfig mc = model::ModelConfig::FromKeyValue(kv);
  const std::vector<double> mus = kv.GetDoubleList("sweep.mu", {0.1, 1.0, 10.0});
  const train::Dataset data = LoadDataset(args.features);
  const fs::path out(args.out);
  PrepareOutput(out);
  RunManifest manifest = BeginRun("sweep-mu", kv.Hash(), tc.seed, {args.features}, out);
  std::vector<train::MuSweepRow> rows = train::SweepMu(mc, data, tc, mus);
  train::WriteMuSweepCsv(out / "mu_sweep.csv", rows);
  for (const auto& r : rows)
    Info("mu " + FormatDouble(r.mu) + ": audio " + FormatDouble(r.final_audio) + ", visual " +
         FormatDouble(r.final_visual));
  manifest.Finalize();
}

// --- probe-visual ---

void RunProbe(const CommonArgs& common, const ProbeArgs& args) {
  RequireDir(args.model, "model");
  RequireDir(args.mix, "mix");
  RequireDir(args.corpus, "corpus");
  if (args.out.empty()) throw Error("probe-visual: --out is required");
  const KeyValueConfig kv = LoadConfig(common);
  const visual::MouthImage fake = FakeMouth(args.fake);
  std::vector<model::Model> models = LoadModels(args.model, common.jobs);
  if (models[0].kind() != model::ModelKind::kAvdcnn)
    throw Error("probe-visual needs an audio-visual late-fusion model");
  const std::vector<Mixture> mixtures = ReadMixtures(args.mix);
  const fs::path out(args.out);
  PrepareOutput(out);
  RunManifest manifest = BeginRun("probe-visual", kv.Hash(), 0,
                                  {args.model, args.mix, args.corpus, args.fake}, out);
  std::vector<train::ProbeResult> results(mixtures.size());
  ForChunks(mixtures.size(), common.jobs, [&](int w, std::size_t i) {
    const Mixture& mx = mixtures[i];
    train::TestUtterance u;
    u.id = mx.file;
    const fs::path base = fs::path(args.corpus) / mx.utterance_id;
    u.clean = dsp::ReadWav(base.string() + ".wav");
    u.noisy = dsp::ReadWav(fs::path(args.mix) / mx.file);
    u.frames = visual::ReadFrameSequence(base);
    results[i] = train::MismatchedVisualProbe(models[w], u, fake);
  });
  CsvTable t;
  t.header = {"file", "correct_stoi", "fake_stoi", "correct_sdi", "fake_sdi"};
  train::ProbeResult mean;
  for (std::size_t i = 0; i < mixtures.size(); ++i) {
    const auto& r = results[i];
    t.rows.push_back({mixtures[i].file, FormatDouble(r.correct.stoi), FormatDouble(r.fake.stoi),
                      FormatDouble(r.correct.sdi), FormatDouble(r.fake.sdi)});
    mean.correct.stoi += r.correct.stoi / mixtures.size();
    mean.fake.stoi += r.fake.stoi / mixtures.size();
    mean.correct.sdi += r.correct.sdi / mixtures.size();
    mean.fake.sdi += r.fake.sdi / mixtures.size();
  }
  t.rows.push_back({"mean", FormatDouble(mean.correct.stoi), FormatDouble(mean.fake.stoi),
                    FormatDouble(mean.correct.sdi), FormatDouble(mean.fake.sdi)});
  WriteCsvFile(out / "probe.csv", t);
  Info("STOI correct " + FormatDouble(mean.correct.stoi) + ", fake " + FormatDouble(mean.fake.stoi));
  manifest.Finalize();
}

}  // namespace avse::cli
