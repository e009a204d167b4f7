#ifndef AVSE_NN_OPS_H_
#define AVSE_NN_OPS_H_

#include <cstdint>
#include <vector>

#include "avse/core/rng.h"
#include "avse/core/tensor.h"

namespace avse::nn {

enum class Mode { kTrain, kInference };
enum class Activation { kLinear, kSigmoid };

// ---------------------------------------------------------------------------
// Convolution. Valid padding, stride 1, cross-correlation.
//   x: B x H x W x Cin (or H x W x Cin, treated as B = 1)
//   kernels: kh x kw x Cin x Cout, bias: Cout
//   out: B x (H-kh+1) x (W-kw+1) x Cout

template <typename T>
struct ConvCache {
  BasicTensor<T> cols;  // im2col patches, (B*Ho*Wo) x (kh*kw*Cin)
  Dims input_dims;      // always rank 4
  bool batched = true;
};

template <typename T>
struct ConvGrads {
  BasicTensor<T> input;
  BasicTensor<T> kernels;
  BasicTensor<T> bias;
};

template <typename T>
BasicTensor<T> Conv2dForward(const BasicTensor<T>& x, const BasicTensor<T>& kernels,
                             const BasicTensor<T>& bias, ConvCache<T>* cache = nullptr);

template <typename T>
ConvGrads<T> Conv2dBackward(const BasicTensor<T>& grad_out, const BasicTensor<T>& kernels,
                            const ConvCache<T>& cache);

// ---------------------------------------------------------------------------
// Max pooling over non-overlapping pool_h x pool_w windows; trailing rows or
// columns that do not fill a window are dropped.

struct PoolCache {
  std::vector<std::size_t> argmax;  // flat input index per output element
  Dims input_dims;
};

template <typename T>
BasicTensor<T> MaxPoolForward(const BasicTensor<T>& x, int pool_h, int pool_w,
                              PoolCache* cache = nullptr);

template <typename T>
BasicTensor<T> MaxPoolBackward(const BasicTensor<T>& grad_out, const PoolCache& cache);

// ---------------------------------------------------------------------------
// Fully connected: x is B x N, weight N x M, bias M.

template <typename T>
struct DenseGrads {
  BasicTensor<T> input;
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

template <typename T>
BasicTensor<T> DenseForward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                            const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> DenseBackward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x,
                            const BasicTensor<T>& weight);

template <typename T>
BasicTensor<T> ActivationForward(const BasicTensor<T>& x, Activation act);

// `y` is the forward output.
template <typename T>
BasicTensor<T> ActivationBackward(const BasicTensor<T>& grad_out, const BasicTensor<T>& y,
                                  Activation act);

// act(x W + b)
template <typename T>
BasicTensor<T> FcForward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                         const BasicTensor<T>& bias, Activation act);

// ---------------------------------------------------------------------------
// Batch normalization over the last axis (features for FC input, channels
// for conv maps); statistics pool every other position of the batch.

struct BatchNormOptions {
  double momentum = 0.99;
  double epsilon = 1e-5;
};

template <typename T>
struct BatchNormState {
  BasicTensor<T> gamma;
  BasicTensor<T> beta;
  BasicTensor<T> running_mean;
  BasicTensor<T> running_var;

  static BatchNormState Create(int channels);
};

template <typename T>
struct BatchNormCache {
  BasicTensor<T> xhat;
  std::vector<double> inv_std;
  Mode mode = Mode::kTrain;
};

template <typename T>
struct BatchNormGrads {
  BasicTensor<T> input;
  BasicTensor<T> gamma;
  BasicTensor<T> beta;
};

// Training mode normalizes with batch statistics (biased variance) and
// updates the running averages; it requires a batch of at least 2.
template <typename T>
BasicTensor<T> BatchNormForward(const BasicTensor<T>& x, BatchNormState<T>& state, Mode mode,
                                const BatchNormOptions& opts = {},
                                BatchNormCache<T>* cache = nullptr);

template <typename T>
BatchNormGrads<T> BatchNormBackward(const BasicTensor<T>& grad_out, const BasicTensor<T>& gamma,
                                    const BatchNormCache<T>& cache);

// ---------------------------------------------------------------------------
// Inverted dropout. `mask` receives 1 for kept entries.

template <typename T>
BasicTensor<T> DropoutForward(const BasicTensor<T>& x, double rate, Rng& rng, Mode mode,
                              std::vector<std::uint8_t>* mask = nullptr);

template <typename T>
BasicTensor<T> DropoutBackward(const BasicTensor<T>& grad_out,
                               const std::vector<std::uint8_t>& mask, double rate);

// ---------------------------------------------------------------------------

template <typename T>
struct LossResult {
  double value = 0.0;
  BasicTensor<T> grad;
};

// Mean over the batch (leading axis) of squared L2 distances between rows.
template <typename T>
LossResult<T> MseLoss(const BasicTensor<T>& pred, const BasicTensor<T>& target);

struct RmsPropOptions {
  double learning_rate = 1e-4;
  double rho = 0.9;
  double epsilon = 1e-8;
};

// v <- rho v + (1 - rho) g^2 ;  p <- p - lr g / (sqrt(v) + eps)
template <typename T>
void RmsPropStep(BasicTensor<T>& param, const BasicTensor<T>& grad,
                 BasicTensor<T>& accumulator, const RmsPropOptions& opts);

}  // namespace avse::nn

#endif  // AVSE_NN_OPS_H_
