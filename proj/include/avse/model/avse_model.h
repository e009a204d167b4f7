#ifndef AVSE_MODEL_AVSE_MODEL_H_
#define AVSE_MODEL_AVSE_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "avse/core/kv_config.h"
#include "avse/core/tensor.h"
#include "avse/nn/checkpoint.h"
#include "avse/nn/layers.h"

namespace avse::model {

enum class ModelKind { kAvdcnn, kAdcnn, kAvdcnnEf };

ModelKind ParseModelKind(const std::string& s);
std::string ModelKindName(ModelKind k);

// Kernel geometry of the convolutional stages; fixed by the architecture.
struct KernelShape {
  int h;
  int w;
};
inline constexpr KernelShape kConvA1{12, 2};
inline constexpr KernelShape kPoolA1{2, 1};
inline constexpr KernelShape kConvA2{5, 1};
// Visual kernels are (24-axis, 16-axis): they run on the transposed plane.
inline constexpr KernelShape kConvV1{15, 2};
inline constexpr KernelShape kConvV2{7, 2};
inline constexpr KernelShape kConvV3{3, 2};

inline constexpr int kAudioDim = 257;
inline constexpr int kAudioContext = 5;
inline constexpr int kVisualDim = 16 * 24 * 3;
inline constexpr int kEfColumns = 29;
inline constexpr int kEfVisualRows = 240;
// Reference merged-layer width; the shape ledger reports the difference.
inline constexpr int kReferenceMergedWidth = 2804;

struct ModelConfig {
  ModelKind kind = ModelKind::kAvdcnn;
  int conv_a1_filters = 10;
  int conv_a2_filters = 4;
  int conv_v1_filters = 12;
  int conv_v2_filters = 10;
  int conv_v3_filters = 6;
  // Filters of the last united conv in the early-fusion model. The audio
  // branch uses 4; the early-fusion stack uses fewer so its parameter count
  // stays on the order of the late-fusion model.
  int ef_conv2_filters = 2;
  int fc1 = 1000;
  int fc2 = 800;
  int fc_a3 = 600;
  int fc_v3 = 1500;
  double dropout = 0.1;
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-5;
  nn::InitMode init = nn::InitMode::kScaled;

  void Validate() const;
  // Reads `model.*` keys; absent keys keep the defaults above.
  static ModelConfig FromKeyValue(const KeyValueConfig& kv);
  std::map<std::string, std::string> ToMap() const;
  static ModelConfig FromMap(const std::map<std::string, std::string>& m);
};

// One training/inference batch. Rows are time steps.
//   x: B x 257 x 5 x 1 noisy log-power context blocks
//   z: B x 16 x 24 x 15 visual stacks (empty for the audio-only model)
//   y: B x 257 clean central frames
//   zc: B x 1152 clean central mouth images
struct Batch {
  Tensor x;
  Tensor z;
  Tensor y;
  Tensor zc;
  int size() const { return x.empty() ? 0 : x.dim(0); }
};

struct ShapeLedger {
  std::vector<nn::ShapeStep> audio;   // AVDCNN / ADCNN audio branch
  std::vector<nn::ShapeStep> visual;  // AVDCNN visual branch
  std::vector<nn::ShapeStep> united;  // early-fusion conv stack
  int audio_code = 0;
  int visual_code = 0;
  int merged = 0;

  std::string Report() const;
};

template <typename T>
struct ModelOutput {
  BasicTensor<T> audio;   // B x 257
  BasicTensor<T> visual;  // B x 1152; empty for the audio-only model
};

template <typename T>
struct JointLossResult {
  double total = 0.0;
  double audio = 0.0;
  double visual = 0.0;
  BasicTensor<T> grad_audio;
  BasicTensor<T> grad_visual;
};

// mean_b ||yhat_b - y_b||^2 + mu * mean_b ||zhat_b - zc_b||^2. With an empty
// `zhat` the visual term is absent.
template <typename T>
JointLossResult<T> JointLoss(const BasicTensor<T>& yhat, const BasicTensor<T>& y,
                             const BasicTensor<T>& zhat, const BasicTensor<T>& zc, double mu);

// Assembles the 257 x 29 x 1 early-fusion input from audio blocks
// (B x 257 x 5 x 1) and visual stacks (B x 16 x 24 x 15): audio in columns
// 0-4; visual pixel (y, x) of channel c in context frame f at row
// c * 80 + f * 16 + y, column 5 + x; rows 240-256 of the visual columns are 0.
template <typename T>
BasicTensor<T> AssembleEarlyFusionInput(const BasicTensor<T>& x, const BasicTensor<T>& z);

template <typename T>
class AvseModel {
 public:
  explicit AvseModel(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ModelKind kind() const { return cfg_.kind; }
  bool uses_visual_input() const { return cfg_.kind != ModelKind::kAdcnn; }
  bool has_visual_head() const { return cfg_.kind != ModelKind::kAdcnn; }

  void Initialize(std::uint64_t seed);

  // Late-fusion pieces. ForwardVisual is unavailable for the audio-only and
  // early-fusion models.
  BasicTensor<T> ForwardAudio(const BasicTensor<T>& x, nn::ForwardContext& ctx);
  BasicTensor<T> ForwardVisual(const BasicTensor<T>& z, nn::ForwardContext& ctx);
  // Trunk and heads on a code. For AVDCNN `code` is concat(A, V) built from
  // the two arguments; for ADCNN `v` must be empty; for AVDCNN-EF `a` is the
  // united-stack code and `v` must be empty.
  ModelOutput<T> FuseForward(const BasicTensor<T>& a, const BasicTensor<T>& v,
                             nn::ForwardContext& ctx);

  ModelOutput<T> Forward(const BasicTensor<T>& x, const BasicTensor<T>& z, nn::ForwardContext& ctx);
  // Backpropagates output gradients of the last Forward, accumulating into
  // every parameter's grad. `grad_visual` may be empty.
  void Backward(const BasicTensor<T>& grad_audio, const BasicTensor<T>& grad_visual);

  std::vector<nn::Parameter<T>*> Parameters();
  std::size_t NumTrainable();
  // Hash of the max-pool routing of the last forward pass.
  std::uint64_t BranchSignature() const;
  ShapeLedger Shapes() const;
  int code_width() const { return code_width_; }
  int audio_code_width() const { return audio_code_; }
  int visual_code_width() const { return visual_code_; }

 private:
  void Build();

  ModelConfig cfg_;
  nn::Sequential<T> audio_;
  nn::Sequential<T> visual_;
  nn::Sequential<T> united_;
  nn::Sequential<T> trunk_;
  nn::Sequential<T> audio_head_;
  nn::Sequential<T> visual_head_;
  int audio_code_ = 0;
  int visual_code_ = 0;
  int code_width_ = 0;
  Dims last_input_dims_;
};

using Model = AvseModel<float>;

// Checkpoint I/O: header carries `kind` and every ModelConfig key plus
// `extra`; tensors are the model parameters by name.
void SaveModel(const std::filesystem::path& dir, Model& model,
               const std::map<std::string, std::string>& extra = {},
               const std::vector<std::pair<std::string, Tensor>>& extra_tensors = {});
Model LoadModel(const std::filesystem::path& dir, nn::Checkpoint* raw = nullptr);

}  // namespace avse::model

#endif  // AVSE_MODEL_AVSE_MODEL_H_
