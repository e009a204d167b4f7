#ifndef AVSE_NN_LAYERS_H_
#define AVSE_NN_LAYERS_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "avse/core/rng.h"
#include "avse/core/tensor.h"
#include "avse/nn/ops.h"

namespace avse::nn {

// A named tensor owned by a layer. Non-trainable parameters (batch norm
// running statistics) are persisted but never touched by the optimizer.
template <typename T>
struct Parameter {
  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;
  bool trainable = true;
};

struct ForwardContext {
  Mode mode = Mode::kTrain;
  Rng* rng = nullptr;  // dropout source; required in training mode
};

enum class InitMode { kUniform, kScaled };

InitMode ParseInitMode(const std::string& s);
std::string InitModeName(InitMode m);

// Every layer maps a batch (leading axis B) to a batch. Shapes passed to
// OutputShape exclude the batch axis.
template <typename T>
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  virtual std::string Kind() const = 0;
  virtual Dims OutputShape(const Dims& in) const = 0;

  virtual BasicTensor<T> Forward(const BasicTensor<T>& x, ForwardContext& ctx) = 0;
  // Returns the gradient w.r.t. the last Forward input and accumulates
  // parameter gradients.
  virtual BasicTensor<T> Backward(const BasicTensor<T>& grad_out) = 0;

  virtual std::vector<Parameter<T>*> Parameters() { return {}; }
  virtual void Initialize(InitMode /*mode*/, Rng& /*rng*/) {}

  // Identifies the piecewise-linear region the last Forward landed in
  // (max-pool argmax choices); 0 for smooth layers.
  virtual std::uint64_t BranchSignature() const { return 0; }

 private:
  std::string name_;
};

template <typename T>
class Conv2dLayer : public Layer<T> {
 public:
  Conv2dLayer(std::string name, int kh, int kw, int cin, int cout);
  std::string Kind() const override { return "conv2d"; }
  Dims OutputShape(const Dims& in) const override;
  BasicTensor<T> Forward(const BasicTensor<T>& x, ForwardContext& ctx) override;
  BasicTensor<T> Backward(const BasicTensor<T>& grad_out) override;
  std::vector<Parameter<T>*> Parameters() override { return {&kernels_, &bias_}; }
  void Initialize(InitMode mode, Rng& rng) override;

  Parameter<T>& kernels() { return kernels_; }
  Parameter<T>& bias() { return bias_; }

 private:
  int kh_, kw_, cin_, cout_;
  Parameter<T> kernels_, bias_;
  ConvCache<T> cache_;
};

template <typename T>
class MaxPoolLayer : public Layer<T> {
 public:
  MaxPoolLayer(std::string name, int ph, int pw) : Layer<T>(std::move(name)), ph_(ph), pw_(pw) {}
  std::string Kind() const override { return "maxpool"; }
  Dims OutputShape(const Dims& in) const override;
  BasicTensor<T> Forward(const BasicTensor<T>& x, ForwardContext& ctx) override;
  BasicTensor<T> Backward(const BasicTensor<T>& grad_out) override;
  std::uint64_t BranchSignature() const override;

 private:
  int ph_, pw_;
  PoolCache cache_;
};

template <typename T>
class DenseLayer : public Layer<T> {
 public:
  DenseLayer(std::string name, int in, int out);
  std::string Kind() const override { return "fc"; }
  Dims OutputShape(const Dims& in) const override;
  BasicTensor<T> Forward(const BasicTensor<T>& x, ForwardContext& ctx) override;
  BasicTensor<T> Backward(const BasicTensor<T>& grad_out) override;
  std::vector<Parameter<T>*> Parameters() override { return {&weight_, &bias_}; }
  void Initialize(InitMode mode, Rng& rng) override;

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  int in_, out_;
  Parameter<T> weight_, bias_;
  BasicTensor<T> input_;
};

template <typename T>
class BatchNormLayer : public Layer<T> {
 public:
  BatchNormLayer(std::string name, int channels, BatchNormOptions opts = {});
  std::string Kind() const override { return "batchnorm"; }
  Dims OutputShape(const Dims& in) const override;
  BasicTensor<T> Forward(const BasicTensor<T>& x, ForwardContext& ctx) override;
  BasicTensor<T> Backward(const BasicTensor<T>& grad_out) override;
  std::vector<Parameter<T>*> Parameters() override {
    return {&gamma_, &beta_, &running_mean_, &running_var_};
  }
  void Initialize(InitMode mode, Rng& rng) override;

 private:
  int channels_;
  BatchNormOptions opts_;
  Parameter<T> gamma_, beta_, running_mean_, running_var_;
  BatchNormCache<T> cache_;
};

template <typename T>
class ActivationLayer : public Layer<T> {
 public:
  ActivationLayer(std::string name, Activation act) : Layer<T>(std::move(name)), act_(act) {}
  std::string Kind() const override {
    return act_ == Activation::kSigmoid ? "sigmoid" : "linear";
  }
  Dims OutputShape(const Dims& in) const override { return in; }
  BasicTensor<T> Forward(const BasicTensor<T>& x, ForwardContext& ctx) override;
  BasicTensor<T> Backward(const BasicTensor<T>& grad_out) override;

 private:
  Activation act_;
  BasicTensor<T> output_;
};

template <typename T>
class DropoutLayer : public Layer<T> {
 public:
  DropoutLayer(std::string name, double rate);
  std::string Kind() const override { return "dropout"; }
  Dims OutputShape(const Dims& in) const override { return in; }
  BasicTensor<T> Forward(const BasicTensor<T>& x, ForwardContext& ctx) override;
  BasicTensor<T> Backward(const BasicTensor<T>& grad_out) override;

 private:
  double rate_;
  std::vector<std::uint8_t> mask_;
};

// Collapses every non-batch axis.
template <typename T>
class FlattenLayer : public Layer<T> {
 public:
  explicit FlattenLayer(std::string name) : Layer<T>(std::move(name)) {}
  std::string Kind() const override { return "flatten"; }
  Dims OutputShape(const Dims& in) const override { return {static_cast<int>(NumElements(in))}; }
  BasicTensor<T> Forward(const BasicTensor<T>& x, ForwardContext& ctx) override;
  BasicTensor<T> Backward(const BasicTensor<T>& grad_out) override;

 private:
  Dims input_dims_;
};

// B x H x W x C -> B x W x H x C.
template <typename T>
class SwapSpatialLayer : public Layer<T> {
 public:
  explicit SwapSpatialLayer(std::string name) : Layer<T>(std::move(name)) {}
  std::string Kind() const override { return "swap_hw"; }
  Dims OutputShape(const Dims& in) const override;
  BasicTensor<T> Forward(const BasicTensor<T>& x, ForwardContext& ctx) override;
  BasicTensor<T> Backward(const BasicTensor<T>& grad_out) override;
};

struct ShapeStep {
  std::string layer;
  std::string kind;
  Dims output;
};

template <typename T>
class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  template <typename L, typename... Args>
  L& Add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  std::size_t size() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }

  BasicTensor<T> Forward(const BasicTensor<T>& x, ForwardContext& ctx);
  BasicTensor<T> Backward(const BasicTensor<T>& grad_out);
  std::vector<Parameter<T>*> Parameters();
  void Initialize(InitMode mode, Rng& rng);
  void ZeroGrad();
  std::uint64_t BranchSignature() const;

  // Output shape after every layer, starting from per-sample `input`.
  std::vector<ShapeStep> ShapeChain(const Dims& input) const;
  Dims OutputShape(const Dims& input) const;

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

template <typename T>
void ZeroGrads(const std::vector<Parameter<T>*>& params);

template <typename T>
std::size_t CountTrainable(const std::vector<Parameter<T>*>& params);

}  // namespace avse::nn

#endif  // AVSE_NN_LAYERS_H_
