#include <iostream>

#include "CLI11.hpp"
#include "avse/core/error.h"
#include "commands.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitNumeric = 3;

void AddCommon(CLI::App* app, avse::cli::CommonArgs& common) {
  app->add_option("-c,--config", common.config, "key=value config file (default $AVSE_CONFIG)");
  app->add_option("-s,--set", common.sets, "override a config key, key=value (repeatable)");
  app->add_option("-j,--jobs", common.jobs, "worker threads for per-utterance work")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace avse::cli;
  CLI::App app{"Audio-visual speech enhancement toolkit"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress messages");
  CommonArgs common;

  SynthArgs synth;
  CLI::App* c_synth = app.add_subcommand("synth", "synthesize a corpus or noise set");
  AddCommon(c_synth, common);
  c_synth->add_option("-o,--out", synth.out, "output directory")->required();
  c_synth->add_flag("--noise", synth.noise, "write interference and ambient noise instead");

  MixArgs mix;
  CLI::App* c_mix = app.add_subcommand("mix", "mix a corpus with noise over SIR x SAR grids");
  AddCommon(c_mix, common);
  c_mix->add_option("--corpus", mix.corpus, "corpus directory")->required();
  c_mix->add_option("--noise", mix.noise, "directory of interference .wav files")->required();
  c_mix->add_option("--ambient", mix.ambient, "ambient noise .wav");
  c_mix->add_option("-o,--out", mix.out, "output directory")->required();

  FeaturesArgs feat;
  CLI::App* c_feat = app.add_subcommand("features", "extract training features");
  AddCommon(c_feat, common);
  c_feat->add_option("--corpus", feat.corpus, "corpus directory")->required();
  c_feat->add_option("--mix", feat.mix, "mixed set (default: clean pairs)");
  c_feat->add_flag("--audio-only", feat.audio_only, "skip the visual stream");
  c_feat->add_option("-o,--out", feat.out, "output directory")->required();

  TrainArgs trn;
  CLI::App* c_train = app.add_subcommand("train", "train a model");
  AddCommon(c_train, common);
  c_train->add_option("--features", trn.features, "features directory")->required();
  c_train->add_option("--resume", trn.resume, "continue a previous train output directory");
  c_train->add_option("-o,--out", trn.out, "output directory")->required();
  std::string kind;
  c_train->add_option("--kind", kind, "avdcnn, adcnn or avdcnn_ef");

  EnhanceArgs enh;
  CLI::App* c_enh = app.add_subcommand("enhance", "enhance one utterance or a mixed set");
  AddCommon(c_enh, common);
  c_enh->add_option("--model", enh.model, "trained model directory")->required();
  c_enh->add_option("--noisy", enh.noisy, "noisy .wav");
  c_enh->add_option("--frames", enh.frames, "mouth frame directory for --noisy");
  c_enh->add_option("--mix", enh.mix, "mixed set directory");
  c_enh->add_option("--corpus", enh.corpus, "corpus directory (frames for --mix)");
  c_enh->add_option("-o,--out", enh.out, "output directory")->required();

  EvalArgs ev;
  CLI::App* c_eval = app.add_subcommand("eval", "score enhanced sets and aggregate");
  AddCommon(c_eval, common);
  c_eval->add_option("--corpus", ev.corpus, "corpus directory (clean references)")->required();
  c_eval->add_option("--mix", ev.mix, "mixed set directory")->required();
  c_eval->add_option("--enhanced", ev.enhanced, "method=directory (repeatable)");
  c_eval->add_option("--import", ev.imports, "external score CSV (repeatable)");
  c_eval->add_option("-o,--out", ev.out, "output directory")->required();

  SpectrogramArgs spec;
  CLI::App* c_spec = app.add_subcommand("spectrogram", "render a log-power spectrogram as PGM");
  AddCommon(c_spec, common);
  c_spec->add_option("--wav", spec.wav, "input .wav")->required();
  c_spec->add_option("-o,--out", spec.out, "output directory")->required();

  SweepMuArgs sweep;
  CLI::App* c_sweep = app.add_subcommand("sweep-mu", "train once per visual loss weight");
  AddCommon(c_sweep, common);
  c_sweep->add_option("--features", sweep.features, "features directory")->required();
  c_sweep->add_option("-o,--out", sweep.out, "output directory")->required();

  ProbeArgs probe;
  CLI::App* c_probe = app.add_subcommand("probe-visual", "enhance with a constant fake mouth");
  AddCommon(c_probe, common);
  c_probe->add_option("--model", probe.model, "trained model directory")->required();
  c_probe->add_option("--mix", probe.mix, "mixed set directory")->required();
  c_probe->add_option("--corpus", probe.corpus, "corpus directory")->required();
  c_probe->add_option("--fake", probe.fake, "closed, open or a PPM path");
  c_probe->add_option("-o,--out", probe.out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);
  avse::SetVerbose(!quiet);
  if (!kind.empty()) common.sets.push_back("model.kind=" + kind);

  try {
    if (c_synth->parsed()) RunSynth(common, synth);
    else if (c_mix->parsed()) RunMix(common, mix);
    else if (c_feat->parsed()) RunFeatures(common, feat);
    else if (c_train->parsed()) RunTrain(common, trn);
    else if (c_enh->parsed()) RunEnhance(common, enh);
    else if (c_eval->parsed()) RunEval(common, ev);
    else if (c_spec->parsed()) RunSpectrogram(common, spec);
    else if (c_sweep->parsed()) RunSweepMu(common, sweep);
    else if (c_probe->parsed()) RunProbe(common, probe);
  } catch (const avse::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
