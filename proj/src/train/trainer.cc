#include "avse/train/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "avse/core/csv.h"
#include "avse/core/error.h"
#include "avse/core/rng.h"
#include "avse/nn/ops.h"

namespace avse::train {

std::string InputTypeName(InputType t) {
  switch (t) {
    case InputType::kAudioVisual: return "audio_visual";
    case InputType::kVisualOnly: return "visual_only";
    case InputType::kAudioOnly: return "audio_only";
  }
  return "?";
}

InputType ParseInputType(const std::string& s) {
  for (InputType t : {InputType::kAudioVisual, InputType::kVisualOnly, InputType::kAudioOnly})
    if (s == InputTypeName(t)) return t;
  throw Error("unknown input type '" + s + "'");
}

TargetPolicy ParseTargetPolicy(const std::string& s) {
  if (s == "model1") return TargetPolicy::kModel1;
  if (s == "model2") return TargetPolicy::kModel2;
  throw Error("unknown target policy '" + s + "' (expected model1 or model2)");
}

std::string TargetPolicyName(TargetPolicy p) {
  return p == TargetPolicy::kModel1 ? "model1" : "model2";
}

// --- TrainConfig ---

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw Error("train.learning_rate must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw Error("train.rho must be in [0, 1)");
  if (!(epsilon > 0.0)) throw Error("train.epsilon must be positive");
  if (batch_size < 2) throw Error("train.batch_size must be at least 2 (batch norm)");
  if (max_epochs < 1) throw Error("train.max_epochs must be positive");
  if (early_stop_window < 1) throw Error("train.early_stop_window must be positive");
  if (!(early_stop_min_rel >= 0.0)) throw Error("train.early_stop_min_rel must be non-negative");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw Error("train.mu must be a finite non-negative number");
  if (segment_epochs < 0) throw Error("train.segment_epochs must be non-negative");
}

int TrainConfig::EffectiveSegmentEpochs() const {
  if (segment_epochs > 0) return segment_epochs;
  if (max_epochs >= kReferenceEpochBudget) return kReferenceSegmentEpochs;
  const double scaled = std::round(double(kReferenceSegmentEpochs) * max_epochs / kReferenceEpochBudget);
  return std::max(1, static_cast<int>(scaled));
}

TrainConfig TrainConfig::FromKeyValue(const KeyValueConfig& kv) {
  TrainConfig c;
  c.learning_rate = kv.GetDouble("train.learning_rate", c.learning_rate);
  c.rho = kv.GetDouble("train.rho", c.rho);
  c.epsilon = kv.GetDouble("train.epsilon", c.epsilon);
  c.batch_size = static_cast<int>(kv.GetInt("train.batch_size", c.batch_size));
  c.max_epochs = static_cast<int>(kv.GetInt("train.max_epochs", c.max_epochs));
  c.early_stop = kv.GetBool("train.early_stop", c.early_stop);
  c.early_stop_window = static_cast<int>(kv.GetInt("train.early_stop_window", c.early_stop_window));
  c.early_stop_min_rel = kv.GetDouble("train.early_stop_min_rel", c.early_stop_min_rel);
  c.mu = kv.GetDouble("train.mu", c.mu);
  c.seed = static_cast<std::uint64_t>(kv.GetInt("train.seed", static_cast<std::int64_t>(c.seed)));
  const std::string sched = kv.GetString("train.schedule", "off");
  if (sched == "off") c.schedule = Schedule::kOff;
  else if (sched == "multistyle") c.schedule = Schedule::kMultistyle;
  else throw Error("train.schedule must be off or multistyle, got '" + sched + "'");
  c.segment_epochs = static_cast<int>(kv.GetInt("train.segment_epochs", c.segment_epochs));
  c.policy = ParseTargetPolicy(kv.GetString("train.policy", TargetPolicyName(c.policy)));
  c.Validate();
  return c;
}

std::map<std::string, std::string> TrainConfig::ToMap() const {
  std::map<std::string, std::string> m;
  m["learning_rate"] = FormatDouble(learning_rate);
  m["rho"] = FormatDouble(rho);
  m["epsilon"] = FormatDouble(epsilon);
  m["batch_size"] = std::to_string(batch_size);
  m["max_epochs"] = std::to_string(max_epochs);
  m["early_stop"] = early_stop ? "true" : "false";
  m["early_stop_window"] = std::to_string(early_stop_window);
  m["early_stop_min_rel"] = FormatDouble(early_stop_min_rel);
  m["mu"] = FormatDouble(mu);
  m["seed"] = std::to_string(seed);
  m["schedule"] = schedule == Schedule::kOff ? "off" : "multistyle";
  m["segment_epochs"] = std::to_string(EffectiveSegmentEpochs());
  m["policy"] = TargetPolicyName(policy);
  return m;
}

// --- data ---

namespace {

void AppendRow(const Tensor& src, int row, Tensor& dst, int dst_row) {
  auto s = src.row(row);
  std::copy(s.begin(), s.end(), dst.row(dst_row).begin());
}

Dims WithRows(const Tensor& t, int n) {
  Dims d = t.dims();
  d[0] = n;
  return d;
}

}  // namespace

Dataset BuildDataset(const std::vector<model::UtteranceFeatures>& utts, int frame_stride) {
  if (utts.empty()) throw Error("dataset: no utterances");
  if (frame_stride < 1) throw Error("dataset: frame stride must be positive");
  bool visual = true;
  int n = 0;
  for (const auto& u : utts) {
    if (u.y.empty()) throw Error("dataset: utterance without clean targets");
    visual = visual && !u.z.empty();
    n += (u.frames() + frame_stride - 1) / frame_stride;
  }
  Dataset d;
  d.x = Tensor(WithRows(utts[0].x, n));
  d.y = Tensor(WithRows(utts[0].y, n));
  if (visual) {
    d.z = Tensor(WithRows(utts[0].z, n));
    d.zc = Tensor(WithRows(utts[0].zc, n));
  }
  int r = 0;
  for (const auto& u : utts)
    for (int t = 0; t < u.frames(); t += frame_stride, ++r) {
      AppendRow(u.x, t, d.x, r);
      AppendRow(u.y, t, d.y, r);
      if (visual) {
        AppendRow(u.z, t, d.z, r);
        AppendRow(u.zc, t, d.zc, r);
      }
    }
  return d;
}

model::Batch GatherBatch(const Dataset& d, const std::vector<int>& index) {
  const int b = static_cast<int>(index.size());
  model::Batch out;
  out.x = Tensor(WithRows(d.x, b));
  out.y = Tensor(WithRows(d.y, b));
  if (d.has_visual()) {
    out.z = Tensor(WithRows(d.z, b));
    out.zc = Tensor(WithRows(d.zc, b));
  }
  for (int i = 0; i < b; ++i) {
    AppendRow(d.x, index[i], out.x, i);
    AppendRow(d.y, index[i], out.y, i);
    if (d.has_visual()) {
      AppendRow(d.z, index[i], out.z, i);
      AppendRow(d.zc, index[i], out.zc, i);
    }
  }
  return out;
}

void ApplyInputType(model::Batch& b, InputType type, TargetPolicy policy) {
  if (type == InputType::kVisualOnly) {
    b.x.Fill(0.0f);
    if (policy == TargetPolicy::kModel1) b.y.Fill(0.0f);
  } else if (type == InputType::kAudioOnly && !b.z.empty()) {
    b.z.Fill(0.0f);
    if (policy == TargetPolicy::kModel1) b.zc.Fill(0.0f);
  }
}

// --- TrainLog ---

void TrainLog::WriteCsv(const std::filesystem::path& path) const {
  CsvTable t;
  t.header = {"epoch", "segment", "modality", "total", "audio", "visual"};
  for (const EpochRecord& e : epochs)
    t.rows.push_back({std::to_string(e.epoch), std::to_string(e.segment), InputTypeName(e.input),
                      FormatDouble(e.total), FormatDouble(e.audio), FormatDouble(e.visual)});
  WriteCsvFile(path, t);
}

TrainLog TrainLog::ReadCsv(const std::filesystem::path& path) {
  CsvTable t = ReadCsvFile(path);
  TrainLog log;
  const int ce = t.Column("epoch"), cs = t.Column("segment"), cm = t.Column("modality"),
            ct = t.Column("total"), ca = t.Column("audio"), cv = t.Column("visual");
  if (ce < 0 || cs < 0 || cm < 0 || ct < 0 || ca < 0 || cv < 0)
    throw Error(path.string() + ": not a training log");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    try {
      EpochRecord e;
      e.epoch = std::stoi(r.at(ce));
      e.segment = std::stoi(r.at(cs));
      e.input = ParseInputType(r.at(cm));
      e.total = std::stod(r.at(ct));
      e.audio = std::stod(r.at(ca));
      e.visual = std::stod(r.at(cv));
      if (!log.epochs.empty() && e.segment != log.epochs.back().segment)
        log.segment_boundaries.push_back(log.epochs.back().epoch);
      log.epochs.push_back(e);
    } catch (const std::exception& ex) {
      throw Error(path.string() + ":" + std::to_string(t.line_numbers[i]) + ": " + ex.what());
    }
  }
  return log;
}

// --- training ---

LossBreakdown EvaluateLoss(model::Model& m, const Dataset& d, double mu, int batch_size,
                           InputType input, TargetPolicy policy) {
  if (d.size() == 0) throw Error("evaluate: empty dataset");
  nn::ForwardContext ctx{nn::Mode::kInference, nullptr};
  LossBreakdown sum;
  std::vector<int> idx;
  for (int b = 0; b < d.size(); b += batch_size) {
    const int e = std::min(d.size(), b + batch_size);
    idx.resize(e - b);
    std::iota(idx.begin(), idx.end(), b);
    model::Batch batch = GatherBatch(d, idx);
    ApplyInputType(batch, input, policy);
    const Tensor& z = m.uses_visual_input() ? batch.z : Tensor();
    model::ModelOutput<float> o = m.Forward(batch.x, z, ctx);
    auto l = model::JointLoss(o.audio, batch.y, o.visual, m.has_visual_head() ? batch.zc : Tensor(), mu);
    sum.total += l.total * (e - b);
    sum.audio += l.audio * (e - b);
    sum.visual += l.visual * (e - b);
  }
  sum.total /= d.size();
  sum.audio /= d.size();
  sum.visual /= d.size();
  return sum;
}

namespace {

constexpr std::uint64_t kShuffleStream = 0x100000;
constexpr std::uint64_t kDropoutStream = 0x200000;
constexpr std::uint64_t kScheduleStream = 0x300000;

InputType SegmentInput(std::uint64_t seed, int segment) {
  Rng r = Rng::Derive(seed, kScheduleStream + segment);
  return static_cast<InputType>(r.UniformInt(0, 2));
}

// Contiguous batch ranges; a trailing batch of one is folded into the
// previous batch because training-mode batch norm needs two samples.
std::vector<std::pair<int, int>> BatchRanges(int n, int batch) {
  std::vector<std::pair<int, int>> r;
  for (int b = 0; b < n; b += batch) r.emplace_back(b, std::min(n, b + batch));
  if (r.size() > 1 && r.back().second - r.back().first < 2) {
    r[r.size() - 2].second = r.back().second;
    r.pop_back();
  }
  return r;
}

}  // namespace

TrainResult Train(model::Model& m, const Dataset& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch, const ResumeState* resume) {
  cfg.Validate();
  if (data.size() < 2) throw Error("train: dataset needs at least 2 frames");
  if (m.uses_visual_input() && !data.has_visual())
    throw Error("train: " + model::ModelKindName(m.kind()) + " needs visual features");
  const bool multistyle = cfg.schedule == Schedule::kMultistyle;
  if (multistyle && m.kind() != model::ModelKind::kAvdcnn)
    throw Error("train: the multistyle schedule needs the audio-visual late-fusion model");

  std::vector<nn::Parameter<float>*> params = m.Parameters();
  const int segment_epochs = cfg.EffectiveSegmentEpochs();
  const bool select_best = cfg.early_stop && !multistyle;
  TrainResult result;
  TrainLog& log = result.log;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_values;
  int start_epoch = 0;

  if (resume) {
    if (resume->optimizer.accumulators.size() != params.size() ||
        resume->last_values.size() != params.size())
      throw Error("train: resume state does not match the model");
    for (std::size_t i = 0; i < params.size(); ++i)
      if (resume->last_values[i].dims() != params[i]->value.dims())
        throw Error("train: resume state shape mismatch for " + params[i]->name);
    result.optimizer = resume->optimizer;
    log = resume->log;
    log.stopped_early = false;
    if (!log.epochs.empty()) start_epoch = log.epochs.back().epoch;
    // Replay the selection rule so the stopping window carries over; the
    // weights in `m` are the ones the resumed run had selected.
    if (select_best && !log.epochs.empty()) {
      for (const EpochRecord& e : log.epochs)
        if (e.total < best_loss * (1.0 - cfg.early_stop_min_rel) || !std::isfinite(best_loss)) {
          best_loss = e.total;
          log.best_epoch = e.epoch;
        }
      for (nn::Parameter<float>* p : params) best_values.push_back(p->value);
      if (start_epoch - log.best_epoch >= cfg.early_stop_window) log.stopped_early = true;
    }
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = resume->last_values[i];
  } else {
    for (nn::Parameter<float>* p : params) result.optimizer.accumulators.emplace_back(p->value.dims());
    log.initial_loss = EvaluateLoss(m, data, cfg.mu).total;
  }
  const nn::RmsPropOptions opt{cfg.learning_rate, cfg.rho, cfg.epsilon};

  const Tensor kNoTensor;
  std::vector<int> order(data.size());
  for (int epoch = start_epoch + 1; epoch <= cfg.max_epochs && !log.stopped_early; ++epoch) {
    const int segment = multistyle ? (epoch - 1) / segment_epochs : 0;
    const InputType input = multistyle ? SegmentInput(cfg.seed, segment) : InputType::kAudioVisual;
    if (multistyle && segment > 0 && (epoch - 1) % segment_epochs == 0)
      log.segment_boundaries.push_back(epoch - 1);

    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = Rng::Derive(cfg.seed, kShuffleStream + epoch);
    shuffle.Shuffle(order);
    Rng dropout = Rng::Derive(cfg.seed, kDropoutStream + epoch);
    nn::ForwardContext ctx{nn::Mode::kTrain, &dropout};

    double sum_total = 0.0, sum_audio = 0.0, sum_visual = 0.0;
    int batch_no = 0;
    for (auto [b, e] : BatchRanges(data.size(), cfg.batch_size)) {
      ++batch_no;
      model::Batch batch =
          GatherBatch(data, std::vector<int>(order.begin() + b, order.begin() + e));
      if (multistyle) ApplyInputType(batch, input, cfg.policy);
      nn::ZeroGrads(params);
      model::ModelOutput<float> out =
          m.Forward(batch.x, m.uses_visual_input() ? batch.z : kNoTensor, ctx);
      auto loss = model::JointLoss(out.audio, batch.y, out.visual,
                                   m.has_visual_head() ? batch.zc : kNoTensor, cfg.mu);
      if (!std::isfinite(loss.total)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << batch_no
            << " (audio " << loss.audio << ", visual " << loss.visual
            << "); try a smaller learning rate or the scaled init";
        throw NumericError(msg.str());
      }
      m.Backward(loss.grad_audio, loss.grad_visual);
      for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i]->trainable)
          nn::RmsPropStep(params[i]->value, params[i]->grad, result.optimizer.accumulators[i], opt);
      const int n = e - b;
      sum_total += loss.total * n;
      sum_audio += loss.audio * n;
      sum_visual += loss.visual * n;
    }
    EpochRecord rec{epoch, segment, input, sum_total / data.size(), sum_audio / data.size(),
                    sum_visual / data.size()};
    log.epochs.push_back(rec);
    ++result.epochs_run;
    if (on_epoch) on_epoch(rec);

    if (select_best) {
      if (rec.total < best_loss * (1.0 - cfg.early_stop_min_rel) || best_values.empty()) {
        best_loss = rec.total;
        log.best_epoch = epoch;
        best_values.clear();
        for (nn::Parameter<float>* p : params) best_values.push_back(p->value);
      } else if (epoch - log.best_epoch >= cfg.early_stop_window) {
        log.stopped_early = true;
      }
    }
  }
  for (nn::Parameter<float>* p : params) result.last_values.push_back(p->value);
  if (select_best && !best_values.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = std::move(best_values[i]);
  } else if (!log.epochs.empty()) {
    log.best_epoch = log.epochs.back().epoch;
  }
  return result;
}

TrainResult MultistyleTrain(model::Model& m, const Dataset& data, TrainConfig cfg,
                            const EpochCallback& on_epoch) {
  cfg.schedule = Schedule::kMultistyle;
  return Train(m, data, cfg, on_epoch);
}

std::vector<MuSweepRow> SweepMu(const model::ModelConfig& mcfg, const Dataset& data,
                                const TrainConfig& cfg, const std::vector<double>& mus) {
  if (mus.size() < 2) throw Error("mu sweep needs at least two values");
  if (mcfg.kind == model::ModelKind::kAdcnn) throw Error("mu sweep needs a model with a visual head");
  std::vector<MuSweepRow> rows;
  for (double mu : mus) {
    TrainConfig c = cfg;
    c.mu = mu;
    c.Validate();
    model::Model m(mcfg);
    m.Initialize(cfg.seed);
    MuSweepRow row;
    row.mu = mu;
    LossBreakdown before = EvaluateLoss(m, data, mu);
    row.initial_audio = before.audio;
    row.initial_visual = before.visual;
    TrainResult r = Train(m, data, c);
    LossBreakdown after = EvaluateLoss(m, data, mu);
    row.final_audio = after.audio;
    row.final_visual = after.visual;
    row.epochs = r.epochs_run;
    rows.push_back(row);
  }
  return rows;
}

void WriteMuSweepCsv(const std::filesystem::path& path, const std::vector<MuSweepRow>& rows) {
  CsvTable t;
  t.header = {"mu", "initial_audio", "initial_visual", "final_audio", "final_visual", "epochs"};
  for (const MuSweepRow& r : rows)
    t.rows.push_back({FormatDouble(r.mu), FormatDouble(r.initial_audio), FormatDouble(r.initial_visual),
                      FormatDouble(r.final_audio), FormatDouble(r.final_visual),
                      std::to_string(r.epochs)});
  WriteCsvFile(path, t);
}

std::vector<std::pair<std::string, Tensor>> OptimizerTensors(model::Model& m,
                                                             const OptimizerState& s) {
  auto params = m.Parameters();
  if (s.accumulators.size() != params.size()) throw Error("optimizer state does not match the model");
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i]->trainable) out.emplace_back("rmsprop." + params[i]->name, s.accumulators[i]);
  return out;
}

OptimizerState RestoreOptimizer(model::Model& m, const nn::Checkpoint& ck) {
  OptimizerState s;
  for (nn::Parameter<float>* p : m.Parameters()) {
    if (!p->trainable) {
      s.accumulators.emplace_back(p->value.dims());
      continue;
    }
    const Tensor* t = ck.Find("rmsprop." + p->name);
    if (!t) throw Error("checkpoint has no optimizer state for " + p->name);
    if (t->dims() != p->value.dims()) throw Error("optimizer state shape mismatch for " + p->name);
    s.accumulators.push_back(*t);
  }
  return s;
}

}  // namespace avse::train
