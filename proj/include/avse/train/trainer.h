#ifndef AVSE_TRAIN_TRAINER_H_
#define AVSE_TRAIN_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "avse/core/kv_config.h"
#include "avse/model/avse_model.h"
#include "avse/model/enhance.h"

namespace avse::train {

enum class InputType { kAudioVisual, kVisualOnly, kAudioOnly };
enum class Schedule { kOff, kMultistyle };
// What the network is asked to produce for a removed modality: Model-I
// zeros that modality's target, Model-II keeps the clean target.
enum class TargetPolicy { kModel1, kModel2 };

std::string InputTypeName(InputType t);
InputType ParseInputType(const std::string& s);
TargetPolicy ParseTargetPolicy(const std::string& s);
std::string TargetPolicyName(TargetPolicy p);

inline constexpr int kReferenceSegmentEpochs = 45;
inline constexpr int kReferenceEpochBudget = 200;

struct TrainConfig {
  double learning_rate = 1e-4;
  double rho = 0.9;
  double epsilon = 1e-8;
  int batch_size = 64;
  int max_epochs = 200;
  bool early_stop = true;
  int early_stop_window = 20;
  double early_stop_min_rel = 1e-3;
  double mu = 1.0;
  std::uint64_t seed = 1;
  Schedule schedule = Schedule::kOff;
  // Epochs per modality segment; 0 derives it from max_epochs.
  int segment_epochs = 0;
  TargetPolicy policy = TargetPolicy::kModel2;

  void Validate() const;
  // 45 epochs, scaled by max_epochs / 200 for shorter budgets.
  int EffectiveSegmentEpochs() const;
  // Reads `train.*` keys.
  static TrainConfig FromKeyValue(const KeyValueConfig& kv);
  std::map<std::string, std::string> ToMap() const;
};

// Frames of many utterances stacked along the leading axis.
struct Dataset {
  Tensor x;   // N x 257 x 5 x 1
  Tensor z;   // N x 16 x 24 x 15 (empty for audio-only data)
  Tensor y;   // N x 257
  Tensor zc;  // N x 1152 (empty for audio-only data)

  int size() const { return x.empty() ? 0 : x.dim(0); }
  bool has_visual() const { return !z.empty(); }
};

// Keeps every `frame_stride`-th frame of each utterance (offset 0).
Dataset BuildDataset(const std::vector<model::UtteranceFeatures>& utterances, int frame_stride = 1);

// Gathers rows `index` into a batch.
model::Batch GatherBatch(const Dataset& d, const std::vector<int>& index);

// Zeroes the missing input and, under Model-I, the matching target.
void ApplyInputType(model::Batch& b, InputType type, TargetPolicy policy);

struct EpochRecord {
  int epoch = 0;  // 1-based
  int segment = 0;
  InputType input = InputType::kAudioVisual;
  double total = 0.0;
  double audio = 0.0;
  double visual = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::vector<int> segment_boundaries;  // epochs after which the input type was re-drawn
  int best_epoch = 0;                   // epoch whose weights were returned
  bool stopped_early = false;
  double initial_loss = 0.0;            // loss of the initialized model (inference mode)

  void WriteCsv(const std::filesystem::path& path) const;
  static TrainLog ReadCsv(const std::filesystem::path& path);
};

struct LossBreakdown {
  double total = 0.0;
  double audio = 0.0;
  double visual = 0.0;
};

// Loss over the whole dataset in inference mode, sample-weighted over batches.
LossBreakdown EvaluateLoss(model::Model& m, const Dataset& d, double mu, int batch_size = 256,
                           InputType input = InputType::kAudioVisual,
                           TargetPolicy policy = TargetPolicy::kModel2);

struct OptimizerState {
  std::vector<Tensor> accumulators;  // one per model parameter, in order
};

struct TrainResult {
  TrainLog log;
  OptimizerState optimizer;
  std::vector<Tensor> last_values;  // parameters after the final epoch run
  int epochs_run = 0;               // epochs of this call
};

// Everything needed to continue a run exactly: the log so far, the
// optimizer accumulators and the parameters after the log's last epoch.
// The model passed alongside holds the weights the run had selected.
struct ResumeState {
  TrainLog log;
  OptimizerState optimizer;
  std::vector<Tensor> last_values;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Shuffled mini-batch RMSprop on the joint loss. With the schedule off the
// input is always audio-visual and the weights of the selected early-stop
// epoch are left in `m`. With the multistyle schedule every segment draws
// its input type uniformly at random and the final weights are kept.
// With `resume` the run continues after the resumed log's last epoch and
// the returned log includes the resumed epochs.
TrainResult Train(model::Model& m, const Dataset& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {}, const ResumeState* resume = nullptr);

// Train() with the multistyle schedule forced on.
TrainResult MultistyleTrain(model::Model& m, const Dataset& data, TrainConfig cfg,
                            const EpochCallback& on_epoch = {});

struct MuSweepRow {
  double mu = 0.0;
  double initial_audio = 0.0;
  double initial_visual = 0.0;
  double final_audio = 0.0;
  double final_visual = 0.0;
  int epochs = 0;
};

// One training per mu from the same initialization and seed; final losses are
// evaluated in inference mode on `data`.
std::vector<MuSweepRow> SweepMu(const model::ModelConfig& mcfg, const Dataset& data,
                                const TrainConfig& cfg, const std::vector<double>& mus);

void WriteMuSweepCsv(const std::filesystem::path& path, const std::vector<MuSweepRow>& rows);

// Optimizer state persistence alongside a checkpoint ("rmsprop." prefix).
std::vector<std::pair<std::string, Tensor>> OptimizerTensors(model::Model& m,
                                                             const OptimizerState& s);
OptimizerState RestoreOptimizer(model::Model& m, const nn::Checkpoint& ck);

}  // namespace avse::train

#endif  // AVSE_TRAIN_TRAINER_H_
