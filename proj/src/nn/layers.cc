#include "avse/nn/layers.h"

#include <algorithm>
#include <cmath>

#include "avse/core/error.h"

namespace avse::nn {

InitMode ParseInitMode(const std::string& s) {
  if (s == "uniform") return InitMode::kUniform;
  if (s == "scaled") return InitMode::kScaled;
  throw Error("unknown init mode '" + s + "' (expected uniform or scaled)");
}

std::string InitModeName(InitMode m) { return m == InitMode::kUniform ? "uniform" : "scaled"; }

namespace {

template <typename T>
void FillUniform(BasicTensor<T>& t, double bound, Rng& rng) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.Uniform(-bound, bound));
}

template <typename T>
Parameter<T> MakeParam(const std::string& name, Dims dims, bool trainable = true) {
  Parameter<T> p;
  p.name = name;
  p.value = BasicTensor<T>(dims);
  p.grad = BasicTensor<T>(dims);
  p.trainable = trainable;
  return p;
}

template <typename T>
void Accumulate(BasicTensor<T>& acc, const BasicTensor<T>& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

// Weight draw shared by conv and fc: U(-1, 1) or a Glorot range.
template <typename T>
void InitWeights(Parameter<T>& w, Parameter<T>& b, InitMode mode, double fan_in, double fan_out,
                 Rng& rng) {
  if (mode == InitMode::kUniform) {
    FillUniform(w.value, 1.0, rng);
    FillUniform(b.value, 1.0, rng);
  } else {
    FillUniform(w.value, std::sqrt(6.0 / (fan_in + fan_out)), rng);
    b.value.Fill(T(0));
  }
}

}  // namespace

// --- Conv2dLayer ---

template <typename T>
Conv2dLayer<T>::Conv2dLayer(std::string name, int kh, int kw, int cin, int cout)
    : Layer<T>(std::move(name)), kh_(kh), kw_(kw), cin_(cin), cout_(cout) {
  kernels_ = MakeParam<T>(this->name() + ".kernels", {kh, kw, cin, cout});
  bias_ = MakeParam<T>(this->name() + ".bias", {cout});
}

template <typename T>
Dims Conv2dLayer<T>::OutputShape(const Dims& in) const {
  if (in.size() != 3 || in[2] != cin_)
    throw Error(this->name() + ": expected H x W x " + std::to_string(cin_) + " input, got " +
                DimsString(in));
  if (in[0] < kh_ || in[1] < kw_)
    throw Error(this->name() + ": kernel " + std::to_string(kh_) + "x" + std::to_string(kw_) +
                " larger than input " + DimsString(in));
  return {in[0] - kh_ + 1, in[1] - kw_ + 1, cout_};
}

template <typename T>
BasicTensor<T> Conv2dLayer<T>::Forward(const BasicTensor<T>& x, ForwardContext&) {
  return Conv2dForward(x, kernels_.value, bias_.value, &cache_);
}

template <typename T>
BasicTensor<T> Conv2dLayer<T>::Backward(const BasicTensor<T>& grad_out) {
  ConvGrads<T> g = Conv2dBackward(grad_out, kernels_.value, cache_);
  Accumulate(kernels_.grad, g.kernels);
  Accumulate(bias_.grad, g.bias);
  return std::move(g.input);
}

template <typename T>
void Conv2dLayer<T>::Initialize(InitMode mode, Rng& rng) {
  InitWeights(kernels_, bias_, mode, double(kh_) * kw_ * cin_, double(kh_) * kw_ * cout_, rng);
}

// --- MaxPoolLayer ---

template <typename T>
Dims MaxPoolLayer<T>::OutputShape(const Dims& in) const {
  if (in.size() != 3) throw Error(this->name() + ": expected H x W x C input");
  Dims out{in[0] / ph_, in[1] / pw_, in[2]};
  if (out[0] < 1 || out[1] < 1) throw Error(this->name() + ": pool larger than input");
  return out;
}

template <typename T>
BasicTensor<T> MaxPoolLayer<T>::Forward(const BasicTensor<T>& x, ForwardContext&) {
  return MaxPoolForward(x, ph_, pw_, &cache_);
}

template <typename T>
BasicTensor<T> MaxPoolLayer<T>::Backward(const BasicTensor<T>& grad_out) {
  return MaxPoolBackward(grad_out, cache_);
}

template <typename T>
std::uint64_t MaxPoolLayer<T>::BranchSignature() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t a : cache_.argmax) h = (h ^ a) * 0x100000001b3ULL;
  return h;
}

// --- DenseLayer ---

template <typename T>
DenseLayer<T>::DenseLayer(std::string name, int in, int out)
    : Layer<T>(std::move(name)), in_(in), out_(out) {
  weight_ = MakeParam<T>(this->name() + ".weight", {in, out});
  bias_ = MakeParam<T>(this->name() + ".bias", {out});
}

template <typename T>
Dims DenseLayer<T>::OutputShape(const Dims& in) const {
  if (in.size() != 1 || in[0] != in_)
    throw Error(this->name() + ": expected input width " + std::to_string(in_) + ", got " +
                DimsString(in));
  return {out_};
}

template <typename T>
BasicTensor<T> DenseLayer<T>::Forward(const BasicTensor<T>& x, ForwardContext&) {
  input_ = x;
  return DenseForward(x, weight_.value, bias_.value);
}

template <typename T>
BasicTensor<T> DenseLayer<T>::Backward(const BasicTensor<T>& grad_out) {
  DenseGrads<T> g = DenseBackward(grad_out, input_, weight_.value);
  Accumulate(weight_.grad, g.weight);
  Accumulate(bias_.grad, g.bias);
  return std::move(g.input);
}

template <typename T>
void DenseLayer<T>::Initialize(InitMode mode, Rng& rng) {
  InitWeights(weight_, bias_, mode, in_, out_, rng);
}

// --- BatchNormLayer ---

template <typename T>
BatchNormLayer<T>::BatchNormLayer(std::string name, int channels, BatchNormOptions opts)
    : Layer<T>(std::move(name)), channels_(channels), opts_(opts) {
  gamma_ = MakeParam<T>(this->name() + ".gamma", {channels});
  beta_ = MakeParam<T>(this->name() + ".beta", {channels});
  running_mean_ = MakeParam<T>(this->name() + ".running_mean", {channels}, false);
  running_var_ = MakeParam<T>(this->name() + ".running_var", {channels}, false);
  Rng unused(0);
  Initialize(InitMode::kScaled, unused);
}

template <typename T>
Dims BatchNormLayer<T>::OutputShape(const Dims& in) const {
  if (in.empty() || in.back() != channels_)
    throw Error(this->name() + ": expected " + std::to_string(channels_) +
                " channels on the last axis, got " + DimsString(in));
  return in;
}

template <typename T>
void BatchNormLayer<T>::Initialize(InitMode, Rng&) {
  gamma_.value.Fill(T(1));
  beta_.value.Fill(T(0));
  running_mean_.value.Fill(T(0));
  running_var_.value.Fill(T(1));
}

template <typename T>
BasicTensor<T> BatchNormLayer<T>::Forward(const BasicTensor<T>& x, ForwardContext& ctx) {
  BatchNormState<T> state{std::move(gamma_.value), std::move(beta_.value),
                          std::move(running_mean_.value), std::move(running_var_.value)};
  auto restore = [&] {
    gamma_.value = std::move(state.gamma);
    beta_.value = std::move(state.beta);
    running_mean_.value = std::move(state.running_mean);
    running_var_.value = std::move(state.running_var);
  };
  BasicTensor<T> y;
  try {
    y = BatchNormForward(x, state, ctx.mode, opts_, &cache_);
  } catch (...) {
    restore();
    throw;
  }
  restore();
  return y;
}

template <typename T>
BasicTensor<T> BatchNormLayer<T>::Backward(const BasicTensor<T>& grad_out) {
  BatchNormGrads<T> g = BatchNormBackward(grad_out, gamma_.value, cache_);
  Accumulate(gamma_.grad, g.gamma);
  Accumulate(beta_.grad, g.beta);
  return std::move(g.input);
}

// --- ActivationLayer ---

template <typename T>
BasicTensor<T> ActivationLayer<T>::Forward(const BasicTensor<T>& x, ForwardContext&) {
  output_ = ActivationForward(x, act_);
  return output_;
}

template <typename T>
BasicTensor<T> ActivationLayer<T>::Backward(const BasicTensor<T>& grad_out) {
  return ActivationBackward(grad_out, output_, act_);
}

// --- DropoutLayer ---

template <typename T>
DropoutLayer<T>::DropoutLayer(std::string name, double rate)
    : Layer<T>(std::move(name)), rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(this->name() + ": dropout rate must be in [0, 1)");
}

template <typename T>
BasicTensor<T> DropoutLayer<T>::Forward(const BasicTensor<T>& x, ForwardContext& ctx) {
  if (ctx.mode == Mode::kTrain && rate_ > 0.0 && ctx.rng == nullptr)
    throw Error(this->name() + ": training-mode dropout needs an RNG");
  Rng dummy(0);
  return DropoutForward(x, rate_, ctx.rng ? *ctx.rng : dummy, ctx.mode, &mask_);
}

template <typename T>
BasicTensor<T> DropoutLayer<T>::Backward(const BasicTensor<T>& grad_out) {
  return DropoutBackward(grad_out, mask_, rate_);
}

// --- FlattenLayer ---

template <typename T>
BasicTensor<T> FlattenLayer<T>::Forward(const BasicTensor<T>& x, ForwardContext&) {
  input_dims_ = x.dims();
  const int b = x.dim(0);
  return x.Reshaped({b, static_cast<int>(x.size() / b)});
}

template <typename T>
BasicTensor<T> FlattenLayer<T>::Backward(const BasicTensor<T>& grad_out) {
  return grad_out.Reshaped(input_dims_);
}

// --- SwapSpatialLayer ---

namespace {

template <typename T>
BasicTensor<T> SwapHW(const BasicTensor<T>& x) {
  if (x.rank() != 4) throw Error("swap_hw: expected B x H x W x C, got " + x.ShapeString());
  const int b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  BasicTensor<T> y(Dims{b, w, h, c});
  for (int n = 0; n < b; ++n)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const T* src = x.data() + ((static_cast<std::size_t>(n) * h + i) * w + j) * c;
        T* dst = y.data() + ((static_cast<std::size_t>(n) * w + j) * h + i) * c;
        std::copy(src, src + c, dst);
      }
  return y;
}

}  // namespace

template <typename T>
Dims SwapSpatialLayer<T>::OutputShape(const Dims& in) const {
  if (in.size() != 3) throw Error(this->name() + ": expected H x W x C input");
  return {in[1], in[0], in[2]};
}

template <typename T>
BasicTensor<T> SwapSpatialLayer<T>::Forward(const BasicTensor<T>& x, ForwardContext&) {
  return SwapHW(x);
}

template <typename T>
BasicTensor<T> SwapSpatialLayer<T>::Backward(const BasicTensor<T>& grad_out) {
  return SwapHW(grad_out);
}

// --- Sequential ---

template <typename T>
BasicTensor<T> Sequential<T>::Forward(const BasicTensor<T>& x, ForwardContext& ctx) {
  BasicTensor<T> h = x;
  for (auto& l : layers_) h = l->Forward(h, ctx);
  return h;
}

template <typename T>
BasicTensor<T> Sequential<T>::Backward(const BasicTensor<T>& grad_out) {
  BasicTensor<T> g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->Backward(g);
  return g;
}

template <typename T>
std::vector<Parameter<T>*> Sequential<T>::Parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& l : layers_)
    for (Parameter<T>* p : l->Parameters()) out.push_back(p);
  return out;
}

template <typename T>
void Sequential<T>::Initialize(InitMode mode, Rng& rng) {
  for (auto& l : layers_) l->Initialize(mode, rng);
}

template <typename T>
void Sequential<T>::ZeroGrad() {
  ZeroGrads(Parameters());
}

template <typename T>
std::uint64_t Sequential<T>::BranchSignature() const {
  std::uint64_t h = 0;
  for (const auto& l : layers_) h = h * 0x9e3779b97f4a7c15ULL + l->BranchSignature();
  return h;
}

template <typename T>
std::vector<ShapeStep> Sequential<T>::ShapeChain(const Dims& input) const {
  std::vector<ShapeStep> chain;
  Dims d = input;
  for (const auto& l : layers_) {
    d = l->OutputShape(d);
    chain.push_back({l->name(), l->Kind(), d});
  }
  return chain;
}

template <typename T>
Dims Sequential<T>::OutputShape(const Dims& input) const {
  Dims d = input;
  for (const auto& l : layers_) d = l->OutputShape(d);
  return d;
}

template <typename T>
void ZeroGrads(const std::vector<Parameter<T>*>& params) {
  for (Parameter<T>* p : params) p->grad.Fill(T(0));
}

template <typename T>
std::size_t CountTrainable(const std::vector<Parameter<T>*>& params) {
  std::size_t n = 0;
  for (const Parameter<T>* p : params)
    if (p->trainable) n += p->value.size();
  return n;
}

#define AVSE_INSTANTIATE_LAYERS(T)                                        \
  template class Conv2dLayer<T>;                                          \
  template class MaxPoolLayer<T>;                                         \
  template class DenseLayer<T>;                                           \
  template class BatchNormLayer<T>;                                       \
  template class ActivationLayer<T>;                                      \
  template class DropoutLayer<T>;                                         \
  template class FlattenLayer<T>;                                         \
  template class SwapSpatialLayer<T>;                                     \
  template class Sequential<T>;                                           \
  template void ZeroGrads(const std::vector<Parameter<T>*>&);             \
  template std::size_t CountTrainable(const std::vector<Parameter<T>*>&);

AVSE_INSTANTIATE_LAYERS(float)
AVSE_INSTANTIATE_LAYERS(double)

#undef AVSE_INSTANTIATE_LAYERS

}  // namespace avse::nn
