#include "avse/model/avse_model.h"

#include <sstream>

#include "avse/core/error.h"
#include "avse/core/rng.h"
#include "avse/nn/ops.h"

namespace avse::model {

using nn::ActivationLayer;
using nn::BatchNormLayer;
using nn::Conv2dLayer;
using nn::DenseLayer;
using nn::DropoutLayer;
using nn::FlattenLayer;
using nn::MaxPoolLayer;
using nn::SwapSpatialLayer;

ModelKind ParseModelKind(const std::string& s) {
  if (s == "avdcnn") return ModelKind::kAvdcnn;
  if (s == "adcnn") return ModelKind::kAdcnn;
  if (s == "avdcnn_ef") return ModelKind::kAvdcnnEf;
  throw Error("unknown model kind '" + s + "' (expected avdcnn, adcnn or avdcnn_ef)");
}

std::string ModelKindName(ModelKind k) {
  switch (k) {
    case ModelKind::kAvdcnn: return "avdcnn";
    case ModelKind::kAdcnn: return "adcnn";
    case ModelKind::kAvdcnnEf: return "avdcnn_ef";
  }
  return "?";
}

// --- ModelConfig ---

namespace {

struct IntField {
  const char* key;
  int ModelConfig::*member;
};

constexpr IntField kIntFields[] = {
    {"conv_a1_filters", &ModelConfig::conv_a1_filters},
    {"conv_a2_filters", &ModelConfig::conv_a2_filters},
    {"conv_v1_filters", &ModelConfig::conv_v1_filters},
    {"conv_v2_filters", &ModelConfig::conv_v2_filters},
    {"conv_v3_filters", &ModelConfig::conv_v3_filters},
    {"ef_conv2_filters", &ModelConfig::ef_conv2_filters},
    {"fc1", &ModelConfig::fc1},
    {"fc2", &ModelConfig::fc2},
    {"fc_a3", &ModelConfig::fc_a3},
    {"fc_v3", &ModelConfig::fc_v3},
};

struct DoubleField {
  const char* key;
  double ModelConfig::*member;
};

constexpr DoubleField kDoubleFields[] = {
    {"dropout", &ModelConfig::dropout},
    {"bn_momentum", &ModelConfig::bn_momentum},
    {"bn_epsilon", &ModelConfig::bn_epsilon},
};

std::string Exact(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void ModelConfig::Validate() const {
  for (const IntField& f : kIntFields)
    if (this->*f.member < 1) throw Error(std::string("model.") + f.key + " must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("model.dropout must be in [0, 1)");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) throw Error("model.bn_momentum must be in [0, 1)");
  if (!(bn_epsilon > 0.0)) throw Error("model.bn_epsilon must be positive");
}

ModelConfig ModelConfig::FromKeyValue(const KeyValueConfig& kv) {
  ModelConfig c;
  c.kind = ParseModelKind(kv.GetString("model.kind", ModelKindName(c.kind)));
  for (const IntField& f : kIntFields)
    c.*f.member = static_cast<int>(kv.GetInt(std::string("model.") + f.key, c.*f.member));
  for (const DoubleField& f : kDoubleFields)
    c.*f.member = kv.GetDouble(std::string("model.") + f.key, c.*f.member);
  c.init = nn::ParseInitMode(kv.GetString("model.init", nn::InitModeName(c.init)));
  c.Validate();
  return c;
}

std::map<std::string, std::string> ModelConfig::ToMap() const {
  std::map<std::string, std::string> m;
  m["kind"] = ModelKindName(kind);
  for (const IntField& f : kIntFields) m[f.key] = std::to_string(this->*f.member);
  for (const DoubleField& f : kDoubleFields) m[f.key] = Exact(this->*f.member);
  m["init"] = nn::InitModeName(init);
  return m;
}

ModelConfig ModelConfig::FromMap(const std::map<std::string, std::string>& m) {
  KeyValueConfig kv;
  for (const auto& [k, v] : m) kv.Set("model." + k, v);
  return FromKeyValue(kv);
}

// --- ShapeLedger ---

std::string ShapeLedger::Report() const {
  std::ostringstream os;
  auto chain = [&](const char* title, const std::vector<nn::ShapeStep>& steps) {
    if (steps.empty()) return;
    os << title << ":\n";
    for (const nn::ShapeStep& s : steps)
      os << "  " << s.layer << " (" << s.kind << ") -> " << DimsString(s.output) << '\n';
  };
  chain("audio branch", audio);
  chain("visual branch", visual);
  chain("united stack", united);
  os << "audio code " << audio_code << ", visual code " << visual_code << ", merged " << merged
     << " (reference width " << kReferenceMergedWidth << "; difference "
     << merged - kReferenceMergedWidth << ")\n";
  return os.str();
}

// --- loss and input assembly ---

template <typename T>
JointLossResult<T> JointLoss(const BasicTensor<T>& yhat, const BasicTensor<T>& y,
                             const BasicTensor<T>& zhat, const BasicTensor<T>& zc, double mu) {
  if (!(mu >= 0.0)) throw Error("joint loss: mixing weight must be non-negative");
  JointLossResult<T> r;
  nn::LossResult<T> a = nn::MseLoss(yhat, y);
  r.audio = a.value;
  r.grad_audio = std::move(a.grad);
  if (!zhat.empty()) {
    nn::LossResult<T> v = nn::MseLoss(zhat, zc);
    r.visual = v.value;
    r.grad_visual = std::move(v.grad);
    for (std::size_t i = 0; i < r.grad_visual.size(); ++i)
      r.grad_visual[i] = static_cast<T>(mu * r.grad_visual[i]);
  }
  r.total = r.audio + mu * r.visual;
  return r;
}

template <typename T>
BasicTensor<T> AssembleEarlyFusionInput(const BasicTensor<T>& x, const BasicTensor<T>& z) {
  if (x.rank() != 4 || x.dim(1) != kAudioDim || x.dim(2) != kAudioContext || x.dim(3) != 1)
    throw Error("early fusion: audio must be B x 257 x 5 x 1, got " + x.ShapeString());
  if (z.rank() != 4 || z.dim(0) != x.dim(0) || z.dim(1) != 16 || z.dim(2) != 24 || z.dim(3) != 15)
    throw Error("early fusion: visual must be B x 16 x 24 x 15, got " + z.ShapeString());
  const int b = x.dim(0);
  BasicTensor<T> out(Dims{b, kAudioDim, kEfColumns, 1});
  for (int n = 0; n < b; ++n) {
    T* o = out.data() + static_cast<std::size_t>(n) * kAudioDim * kEfColumns;
    const T* xa = x.data() + static_cast<std::size_t>(n) * kAudioDim * kAudioContext;
    const T* zv = z.data() + static_cast<std::size_t>(n) * 16 * 24 * 15;
    for (int r = 0; r < kAudioDim; ++r)
      for (int c = 0; c < kAudioContext; ++c) o[r * kEfColumns + c] = xa[r * kAudioContext + c];
    for (int r = 0; r < kEfVisualRows; ++r) {
      const int ch = r / 80, f = (r % 80) / 16, yy = r % 16;
      for (int xx = 0; xx < 24; ++xx)
        o[r * kEfColumns + kAudioContext + xx] = zv[(yy * 24 + xx) * 15 + 3 * f + ch];
    }
  }
  return out;
}

// --- AvseModel ---

template <typename T>
AvseModel<T>::AvseModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  Build();
}

template <typename T>
void AvseModel<T>::Build() {
  const nn::BatchNormOptions bn{cfg_.bn_momentum, cfg_.bn_epsilon};
  const ModelConfig& c = cfg_;

  if (c.kind == ModelKind::kAvdcnnEf) {
    united_.template Add<Conv2dLayer<T>>("ef.conv_e1", kConvA1.h, kConvA1.w, 1, c.conv_a1_filters);
    united_.template Add<BatchNormLayer<T>>("ef.bn_e1", c.conv_a1_filters, bn);
    united_.template Add<MaxPoolLayer<T>>("ef.pool_e1", kPoolA1.h, kPoolA1.w);
    united_.template Add<Conv2dLayer<T>>("ef.conv_e2", kConvA2.h, kConvA2.w, c.conv_a1_filters,
                                         c.ef_conv2_filters);
    united_.template Add<BatchNormLayer<T>>("ef.bn_e2", c.ef_conv2_filters, bn);
    united_.template Add<FlattenLayer<T>>("ef.flatten");
    audio_code_ = united_.OutputShape({kAudioDim, kEfColumns, 1})[0];
  } else {
    audio_.template Add<Conv2dLayer<T>>("audio.conv_a1", kConvA1.h, kConvA1.w, 1, c.conv_a1_filters);
    audio_.template Add<BatchNormLayer<T>>("audio.bn_a1", c.conv_a1_filters, bn);
    audio_.template Add<MaxPoolLayer<T>>("audio.pool_a1", kPoolA1.h, kPoolA1.w);
    audio_.template Add<Conv2dLayer<T>>("audio.conv_a2", kConvA2.h, kConvA2.w, c.conv_a1_filters,
                                        c.conv_a2_filters);
    audio_.template Add<BatchNormLayer<T>>("audio.bn_a2", c.conv_a2_filters, bn);
    audio_.template Add<FlattenLayer<T>>("audio.flatten");
    audio_code_ = audio_.OutputShape({kAudioDim, kAudioContext, 1})[0];
  }
  if (c.kind == ModelKind::kAvdcnn) {
    visual_.template Add<SwapSpatialLayer<T>>("visual.transpose");
    visual_.template Add<Conv2dLayer<T>>("visual.conv_v1", kConvV1.h, kConvV1.w, 15, c.conv_v1_filters);
    visual_.template Add<BatchNormLayer<T>>("visual.bn_v1", c.conv_v1_filters, bn);
    visual_.template Add<Conv2dLayer<T>>("visual.conv_v2", kConvV2.h, kConvV2.w, c.conv_v1_filters,
                                         c.conv_v2_filters);
    visual_.template Add<BatchNormLayer<T>>("visual.bn_v2", c.conv_v2_filters, bn);
    visual_.template Add<Conv2dLayer<T>>("visual.conv_v3", kConvV3.h, kConvV3.w, c.conv_v2_filters,
                                         c.conv_v3_filters);
    visual_.template Add<BatchNormLayer<T>>("visual.bn_v3", c.conv_v3_filters, bn);
    visual_.template Add<FlattenLayer<T>>("visual.flatten");
    visual_code_ = visual_.OutputShape({16, 24, 15})[0];
  }
  code_width_ = audio_code_ + visual_code_;

  trunk_.template Add<DenseLayer<T>>("trunk.fc1", code_width_, c.fc1);
  trunk_.template Add<BatchNormLayer<T>>("trunk.bn1", c.fc1, bn);
  trunk_.template Add<ActivationLayer<T>>("trunk.sigmoid1", nn::Activation::kSigmoid);
  trunk_.template Add<DropoutLayer<T>>("trunk.dropout1", c.dropout);
  trunk_.template Add<DenseLayer<T>>("trunk.fc2", c.fc1, c.fc2);
  trunk_.template Add<BatchNormLayer<T>>("trunk.bn2", c.fc2, bn);
  trunk_.template Add<ActivationLayer<T>>("trunk.sigmoid2", nn::Activation::kSigmoid);
  trunk_.template Add<DropoutLayer<T>>("trunk.dropout2", c.dropout);

  audio_head_.template Add<DenseLayer<T>>("head_a.fc_a3", c.fc2, c.fc_a3);
  audio_head_.template Add<BatchNormLayer<T>>("head_a.bn_a3", c.fc_a3, bn);
  audio_head_.template Add<DenseLayer<T>>("head_a.out", c.fc_a3, kAudioDim);
  if (has_visual_head()) {
    visual_head_.template Add<DenseLayer<T>>("head_v.fc_v3", c.fc2, c.fc_v3);
    visual_head_.template Add<BatchNormLayer<T>>("head_v.bn_v3", c.fc_v3, bn);
    visual_head_.template Add<DenseLayer<T>>("head_v.out", c.fc_v3, kVisualDim);
  }
}

template <typename T>
void AvseModel<T>::Initialize(std::uint64_t seed) {
  Rng rng = Rng::Derive(seed, 0x696e6974);
  for (nn::Sequential<T>* s : {&audio_, &visual_, &united_, &trunk_, &audio_head_, &visual_head_})
    s->Initialize(cfg_.init, rng);
}

template <typename T>
BasicTensor<T> AvseModel<T>::ForwardAudio(const BasicTensor<T>& x, nn::ForwardContext& ctx) {
  if (cfg_.kind == ModelKind::kAvdcnnEf) throw Error("early-fusion model has no audio branch");
  if (x.rank() != 4 || x.dim(1) != kAudioDim || x.dim(2) != kAudioContext || x.dim(3) != 1)
    throw Error("audio input must be B x 257 x 5 x 1, got " + x.ShapeString());
  return audio_.Forward(x, ctx);
}

template <typename T>
BasicTensor<T> AvseModel<T>::ForwardVisual(const BasicTensor<T>& z, nn::ForwardContext& ctx) {
  if (cfg_.kind != ModelKind::kAvdcnn) throw Error(ModelKindName(cfg_.kind) + " has no visual branch");
  if (z.rank() != 4 || z.dim(1) != 16 || z.dim(2) != 24 || z.dim(3) != 15)
    throw Error("visual input must be B x 16 x 24 x 15, got " + z.ShapeString());
  return visual_.Forward(z, ctx);
}

template <typename T>
ModelOutput<T> AvseModel<T>::FuseForward(const BasicTensor<T>& a, const BasicTensor<T>& v,
                                         nn::ForwardContext& ctx) {
  BasicTensor<T> f;
  if (cfg_.kind == ModelKind::kAvdcnn) {
    if (a.rank() != 2 || v.rank() != 2 || a.dim(0) != v.dim(0) || a.dim(1) != audio_code_ ||
        v.dim(1) != visual_code_)
      throw Error("fusion codes must be B x " + std::to_string(audio_code_) + " and B x " +
                  std::to_string(visual_code_));
    const int b = a.dim(0);
    f = BasicTensor<T>(Dims{b, code_width_});
    for (int n = 0; n < b; ++n) {
      std::copy(a.row(n).begin(), a.row(n).end(), f.row(n).begin());
      std::copy(v.row(n).begin(), v.row(n).end(), f.row(n).begin() + audio_code_);
    }
  } else {
    if (!v.empty()) throw Error(ModelKindName(cfg_.kind) + " takes a single code");
    if (a.rank() != 2 || a.dim(1) != code_width_)
      throw Error("code must be B x " + std::to_string(code_width_) + ", got " + a.ShapeString());
    f = a;
  }
  BasicTensor<T> h = trunk_.Forward(f, ctx);
  ModelOutput<T> out;
  out.audio = audio_head_.Forward(h, ctx);
  if (has_visual_head()) out.visual = visual_head_.Forward(h, ctx);
  return out;
}

template <typename T>
ModelOutput<T> AvseModel<T>::Forward(const BasicTensor<T>& x, const BasicTensor<T>& z,
                                     nn::ForwardContext& ctx) {
  switch (cfg_.kind) {
    case ModelKind::kAvdcnn: {
      BasicTensor<T> a = ForwardAudio(x, ctx);
      BasicTensor<T> v = ForwardVisual(z, ctx);
      return FuseForward(a, v, ctx);
    }
    case ModelKind::kAdcnn:
      return FuseForward(ForwardAudio(x, ctx), BasicTensor<T>(), ctx);
    case ModelKind::kAvdcnnEf:
      return FuseForward(united_.Forward(AssembleEarlyFusionInput(x, z), ctx), BasicTensor<T>(), ctx);
  }
  throw Error("unreachable model kind");
}

template <typename T>
void AvseModel<T>::Backward(const BasicTensor<T>& grad_audio, const BasicTensor<T>& grad_visual) {
  BasicTensor<T> gh = audio_head_.Backward(grad_audio);
  if (has_visual_head() && !grad_visual.empty()) {
    BasicTensor<T> gv = visual_head_.Backward(grad_visual);
    for (std::size_t i = 0; i < gh.size(); ++i) gh[i] += gv[i];
  }
  BasicTensor<T> gf = trunk_.Backward(gh);
  switch (cfg_.kind) {
    case ModelKind::kAvdcnn: {
      const int b = gf.dim(0);
      BasicTensor<T> ga(Dims{b, audio_code_}), gvc(Dims{b, visual_code_});
      for (int n = 0; n < b; ++n) {
        auto row = gf.row(n);
        std::copy(row.begin(), row.begin() + audio_code_, ga.row(n).begin());
        std::copy(row.begin() + audio_code_, row.end(), gvc.row(n).begin());
      }
      audio_.Backward(ga);
      visual_.Backward(gvc);
      break;
    }
    case ModelKind::kAdcnn:
      audio_.Backward(gf);
      break;
    case ModelKind::kAvdcnnEf:
      united_.Backward(gf);
      break;
  }
}

template <typename T>
std::vector<nn::Parameter<T>*> AvseModel<T>::Parameters() {
  std::vector<nn::Parameter<T>*> out;
  for (nn::Sequential<T>* s : {&audio_, &visual_, &united_, &trunk_, &audio_head_, &visual_head_})
    for (nn::Parameter<T>* p : s->Parameters()) out.push_back(p);
  return out;
}

template <typename T>
std::uint64_t AvseModel<T>::BranchSignature() const {
  std::uint64_t h = 0;
  for (const nn::Sequential<T>* s : {&audio_, &visual_, &united_})
    h = h * 0x100000001b3ULL ^ s->BranchSignature();
  return h;
}

template <typename T>
std::size_t AvseModel<T>::NumTrainable() {
  return nn::CountTrainable(Parameters());
}

template <typename T>
ShapeLedger AvseModel<T>::Shapes() const {
  ShapeLedger l;
  if (cfg_.kind == ModelKind::kAvdcnnEf) {
    l.united = united_.ShapeChain({kAudioDim, kEfColumns, 1});
  } else {
    l.audio = audio_.ShapeChain({kAudioDim, kAudioContext, 1});
  }
  if (cfg_.kind == ModelKind::kAvdcnn) l.visual = visual_.ShapeChain({16, 24, 15});
  l.audio_code = audio_code_;
  l.visual_code = visual_code_;
  l.merged = code_width_;
  return l;
}

// --- persistence ---

void SaveModel(const std::filesystem::path& dir, Model& model,
               const std::map<std::string, std::string>& extra,
               const std::vector<std::pair<std::string, Tensor>>& extra_tensors) {
  nn::Checkpoint ck;
  ck.header = model.config().ToMap();
  for (const auto& [k, v] : extra) {
    if (ck.header.count(k)) throw Error("checkpoint header key '" + k + "' is reserved");
    ck.header[k] = v;
  }
  nn::AppendParameters(ck, model.Parameters());
  for (const auto& e : extra_tensors) ck.tensors.push_back(e);
  nn::SaveCheckpoint(dir, ck);
}

Model LoadModel(const std::filesystem::path& dir, nn::Checkpoint* raw) {
  nn::Checkpoint ck = nn::LoadCheckpoint(dir);
  std::map<std::string, std::string> cfg_keys;
  const ModelConfig defaults;
  const auto known = defaults.ToMap();
  for (const auto& [k, v] : ck.header)
    if (known.count(k)) cfg_keys[k] = v;
  if (!cfg_keys.count("kind")) throw Error(dir.string() + ": checkpoint has no model kind");
  Model m(ModelConfig::FromMap(cfg_keys));
  nn::RestoreParameters(ck, m.Parameters());
  if (raw) *raw = std::move(ck);
  return m;
}

#define AVSE_INSTANTIATE_MODEL(T)                                                              \
  template class AvseModel<T>;                                                                 \
  template JointLossResult<T> JointLoss(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                        const BasicTensor<T>&, const BasicTensor<T>&, double); \
  template BasicTensor<T> AssembleEarlyFusionInput(const BasicTensor<T>&, const BasicTensor<T>&);

AVSE_INSTANTIATE_MODEL(float)
AVSE_INSTANTIATE_MODEL(double)

#undef AVSE_INSTANTIATE_MODEL

}  // namespace avse::model
