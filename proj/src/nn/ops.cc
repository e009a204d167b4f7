#include "avse/nn/ops.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "avse/core/error.h"

namespace avse::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
MapMat<T> AsMatrix(BasicTensor<T>& t, Eigen::Index rows, Eigen::Index cols) {
  return MapMat<T>(t.data(), rows, cols);
}
template <typename T>
ConstMapMat<T> AsMatrix(const BasicTensor<T>& t, Eigen::Index rows, Eigen::Index cols) {
  return ConstMapMat<T>(t.data(), rows, cols);
}

[[noreturn]] void ShapeError(const std::string& op, const std::string& detail) {
  throw Error(op + ": " + detail);
}

}  // namespace

// --- convolution -----------------------------------------------------------

template <typename T>
BasicTensor<T> Conv2dForward(const BasicTensor<T>& x, const BasicTensor<T>& kernels,
                             const BasicTensor<T>& bias, ConvCache<T>* cache) {
  const bool batched = x.rank() == 4;
  if (!batched && x.rank() != 3) ShapeError("conv2d", "input must be [B,]H x W x C, got " + x.ShapeString());
  if (kernels.rank() != 4) ShapeError("conv2d", "kernels must be kh x kw x Cin x Cout");
  const int b = batched ? x.dim(0) : 1;
  const int h = x.dim(batched ? 1 : 0), w = x.dim(batched ? 2 : 1), cin = x.dim(batched ? 3 : 2);
  const int kh = kernels.dim(0), kw = kernels.dim(1), cout = kernels.dim(3);
  if (kernels.dim(2) != cin)
    ShapeError("conv2d", "kernel input channels " + std::to_string(kernels.dim(2)) +
                             " != input channels " + std::to_string(cin));
  if (kh > h || kw > w)
    ShapeError("conv2d", "kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                             " larger than input " + std::to_string(h) + "x" + std::to_string(w));
  if (bias.size() != static_cast<std::size_t>(cout)) ShapeError("conv2d", "bias size mismatch");
  const int ho = h - kh + 1, wo = w - kw + 1;
  const int patch = kh * kw * cin;
  const Eigen::Index rows = static_cast<Eigen::Index>(b) * ho * wo;

  BasicTensor<T> cols(Dims{static_cast<int>(rows), patch});
  T* cp = cols.data();
  const T* xp = x.data();
  for (int n = 0; n < b; ++n)
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j) {
        for (int di = 0; di < kh; ++di) {
          const T* src = xp + ((static_cast<std::size_t>(n) * h + i + di) * w + j) * cin;
          std::memcpy(cp, src, sizeof(T) * kw * cin);
          cp += kw * cin;
        }
      }

  Dims out_dims = batched ? Dims{b, ho, wo, cout} : Dims{ho, wo, cout};
  BasicTensor<T> out(out_dims);
  auto om = AsMatrix(out, rows, cout);
  om.noalias() = AsMatrix(cols, rows, patch) * AsMatrix(kernels, patch, cout);
  om.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data(), cout);

  if (cache) {
    cache->cols = std::move(cols);
    cache->input_dims = {b, h, w, cin};
    cache->batched = batched;
  }
  return out;
}

template <typename T>
ConvGrads<T> Conv2dBackward(const BasicTensor<T>& grad_out, const BasicTensor<T>& kernels,
                            const ConvCache<T>& cache) {
  const int b = cache.input_dims[0], h = cache.input_dims[1], w = cache.input_dims[2],
            cin = cache.input_dims[3];
  const int kh = kernels.dim(0), kw = kernels.dim(1), cout = kernels.dim(3);
  const int ho = h - kh + 1, wo = w - kw + 1, patch = kh * kw * cin;
  const Eigen::Index rows = static_cast<Eigen::Index>(b) * ho * wo;
  if (grad_out.size() != static_cast<std::size_t>(rows) * cout)
    ShapeError("conv2d backward", "upstream gradient " + grad_out.ShapeString() +
                                      " does not match cached forward");
  const auto g = AsMatrix(grad_out, rows, cout);

  ConvGrads<T> grads;
  grads.kernels = BasicTensor<T>(kernels.dims());
  AsMatrix(grads.kernels, patch, cout).noalias() =
      AsMatrix(cache.cols, rows, patch).transpose() * g;
  grads.bias = BasicTensor<T>(Dims{cout});
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(grads.bias.data(), cout) = g.colwise().sum();

  RowMat<T> gcols = g * AsMatrix(kernels, patch, cout).transpose();
  grads.input = cache.batched ? BasicTensor<T>(Dims{b, h, w, cin}) : BasicTensor<T>(Dims{h, w, cin});
  T* gx = grads.input.data();
  const T* gc = gcols.data();
  for (int n = 0; n < b; ++n)
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j)
        for (int di = 0; di < kh; ++di) {
          T* dst = gx + ((static_cast<std::size_t>(n) * h + i + di) * w + j) * cin;
          for (int k = 0; k < kw * cin; ++k) dst[k] += gc[k];
          gc += kw * cin;
        }
  return grads;
}

// --- pooling -----------------------------------------------------------------

template <typename T>
BasicTensor<T> MaxPoolForward(const BasicTensor<T>& x, int pool_h, int pool_w, PoolCache* cache) {
  if (x.rank() != 4) ShapeError("maxpool", "input must be B x H x W x C");
  if (pool_h < 1 || pool_w < 1) ShapeError("maxpool", "pool size must be positive");
  const int b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const int ho = h / pool_h, wo = w / pool_w;
  if (ho < 1 || wo < 1) ShapeError("maxpool", "pool larger than input");
  BasicTensor<T> out(Dims{b, ho, wo, c});
  std::vector<std::size_t> argmax(out.size());
  std::size_t o = 0;
  for (int n = 0; n < b; ++n)
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j)
        for (int ch = 0; ch < c; ++ch, ++o) {
          std::size_t best = ((static_cast<std::size_t>(n) * h + i * pool_h) * w + j * pool_w) * c + ch;
          for (int di = 0; di < pool_h; ++di)
            for (int dj = 0; dj < pool_w; ++dj) {
              std::size_t idx =
                  ((static_cast<std::size_t>(n) * h + i * pool_h + di) * w + j * pool_w + dj) * c + ch;
              if (x[idx] > x[best]) best = idx;
            }
          out[o] = x[best];
          argmax[o] = best;
        }
  if (cache) {
    cache->argmax = std::move(argmax);
    cache->input_dims = x.dims();
  }
  return out;
}

template <typename T>
BasicTensor<T> MaxPoolBackward(const BasicTensor<T>& grad_out, const PoolCache& cache) {
  if (grad_out.size() != cache.argmax.size()) ShapeError("maxpool backward", "gradient size mismatch");
  BasicTensor<T> gx(cache.input_dims);
  for (std::size_t o = 0; o < grad_out.size(); ++o) gx[cache.argmax[o]] += grad_out[o];
  return gx;
}

// --- dense ---------------------------------------------------------------------

template <typename T>
BasicTensor<T> DenseForward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                            const BasicTensor<T>& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || x.dim(1) != weight.dim(0) ||
      bias.size() != static_cast<std::size_t>(weight.dim(1)))
    ShapeError("dense", "input " + x.ShapeString() + " vs weight " + weight.ShapeString());
  const int b = x.dim(0), n = weight.dim(0), m = weight.dim(1);
  BasicTensor<T> y(Dims{b, m});
  auto ym = AsMatrix(y, b, m);
  ym.noalias() = AsMatrix(x, b, n) * AsMatrix(weight, n, m);
  ym.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data(), m);
  return y;
}

template <typename T>
DenseGrads<T> DenseBackward(const BasicTensor<T>& grad_out, const BasicTensor<T>& x,
                            const BasicTensor<T>& weight) {
  const int b = x.dim(0), n = weight.dim(0), m = weight.dim(1);
  if (grad_out.dims() != Dims{b, m}) ShapeError("dense backward", "gradient shape mismatch");
  const auto g = AsMatrix(grad_out, b, m);
  DenseGrads<T> grads{BasicTensor<T>(x.dims()), BasicTensor<T>(weight.dims()),
                      BasicTensor<T>(Dims{m})};
  AsMatrix(grads.weight, n, m).noalias() = AsMatrix(x, b, n).transpose() * g;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(grads.bias.data(), m) = g.colwise().sum();
  AsMatrix(grads.input, b, n).noalias() = g * AsMatrix(weight, n, m).transpose();
  return grads;
}

template <typename T>
BasicTensor<T> ActivationForward(const BasicTensor<T>& x, Activation act) {
  if (act == Activation::kLinear) return x;
  BasicTensor<T> y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
  return y;
}

template <typename T>
BasicTensor<T> ActivationBackward(const BasicTensor<T>& grad_out, const BasicTensor<T>& y,
                                  Activation act) {
  if (act == Activation::kLinear) return grad_out;
  BasicTensor<T> g(grad_out.dims());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_out[i] * y[i] * (T(1) - y[i]);
  return g;
}

template <typename T>
BasicTensor<T> FcForward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                         const BasicTensor<T>& bias, Activation act) {
  return ActivationForward(DenseForward(x, weight, bias), act);
}

// --- batch norm ----------------------------------------------------------------

template <typename T>
BatchNormState<T> BatchNormState<T>::Create(int channels) {
  return {BasicTensor<T>(Dims{channels}, T(1)), BasicTensor<T>(Dims{channels}, T(0)),
          BasicTensor<T>(Dims{channels}, T(0)), BasicTensor<T>(Dims{channels}, T(1))};
}

template <typename T>
BasicTensor<T> BatchNormForward(const BasicTensor<T>& x, BatchNormState<T>& state, Mode mode,
                                const BatchNormOptions& opts, BatchNormCache<T>* cache) {
  if (x.rank() < 2) ShapeError("batchnorm", "input must have a batch axis");
  const int c = x.dims().back();
  if (state.gamma.size() != static_cast<std::size_t>(c)) ShapeError("batchnorm", "channel mismatch");
  const std::size_t positions = x.size() / c;
  std::vector<double> mean(c, 0.0), var(c, 0.0);
  if (mode == Mode::kTrain) {
    if (x.dim(0) < 2) throw Error("batchnorm: training mode needs a batch of at least 2");
    for (std::size_t p = 0; p < positions; ++p)
      for (int k = 0; k < c; ++k) mean[k] += x[p * c + k];
    for (int k = 0; k < c; ++k) mean[k] /= static_cast<double>(positions);
    for (std::size_t p = 0; p < positions; ++p)
      for (int k = 0; k < c; ++k) {
        double d = x[p * c + k] - mean[k];
        var[k] += d * d;
      }
    for (int k = 0; k < c; ++k) {
      var[k] /= static_cast<double>(positions);
      state.running_mean[k] = static_cast<T>(opts.momentum * state.running_mean[k] +
                                             (1.0 - opts.momentum) * mean[k]);
      state.running_var[k] = static_cast<T>(opts.momentum * state.running_var[k] +
                                            (1.0 - opts.momentum) * var[k]);
    }
  } else {
    for (int k = 0; k < c; ++k) {
      mean[k] = state.running_mean[k];
      var[k] = state.running_var[k];
    }
  }
  std::vector<double> inv_std(c);
  for (int k = 0; k < c; ++k) inv_std[k] = 1.0 / std::sqrt(var[k] + opts.epsilon);
  BasicTensor<T> y(x.dims());
  BasicTensor<T> xhat(x.dims());
  for (std::size_t p = 0; p < positions; ++p)
    for (int k = 0; k < c; ++k) {
      const std::size_t i = p * c + k;
      const double xh = (x[i] - mean[k]) * inv_std[k];
      xhat[i] = static_cast<T>(xh);
      y[i] = static_cast<T>(state.gamma[k] * xh + state.beta[k]);
    }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  return y;
}

template <typename T>
BatchNormGrads<T> BatchNormBackward(const BasicTensor<T>& grad_out, const BasicTensor<T>& gamma,
                                    const BatchNormCache<T>& cache) {
  const int c = static_cast<int>(gamma.size());
  if (!grad_out.SameShape(cache.xhat)) ShapeError("batchnorm backward", "gradient shape mismatch");
  const std::size_t positions = grad_out.size() / c;
  BatchNormGrads<T> grads{BasicTensor<T>(grad_out.dims()), BasicTensor<T>(Dims{c}),
                          BasicTensor<T>(Dims{c})};
  std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
  for (std::size_t p = 0; p < positions; ++p)
    for (int k = 0; k < c; ++k) {
      const std::size_t i = p * c + k;
      sum_g[k] += grad_out[i];
      sum_gx[k] += static_cast<double>(grad_out[i]) * cache.xhat[i];
    }
  for (int k = 0; k < c; ++k) {
    grads.gamma[k] = static_cast<T>(sum_gx[k]);
    grads.beta[k] = static_cast<T>(sum_g[k]);
  }
  const double m = static_cast<double>(positions);
  for (std::size_t p = 0; p < positions; ++p)
    for (int k = 0; k < c; ++k) {
      const std::size_t i = p * c + k;
      const double scale = gamma[k] * cache.inv_std[k];
      if (cache.mode == Mode::kTrain) {
        grads.input[i] = static_cast<T>(
            scale * (grad_out[i] - sum_g[k] / m - cache.xhat[i] * sum_gx[k] / m));
      } else {
        grads.input[i] = static_cast<T>(scale * grad_out[i]);
      }
    }
  return grads;
}

// --- dropout -------------------------------------------------------------------

template <typename T>
BasicTensor<T> DropoutForward(const BasicTensor<T>& x, double rate, Rng& rng, Mode mode,
                              std::vector<std::uint8_t>* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout: rate must be in [0, 1)");
  if (mode == Mode::kInference || rate == 0.0) {
    if (mask) mask->assign(x.size(), 1);
    return x;
  }
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  BasicTensor<T> y(x.dims());
  std::vector<std::uint8_t> m(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = rng.Uniform() >= rate ? 1 : 0;
    y[i] = m[i] ? x[i] * scale : T(0);
  }
  if (mask) *mask = std::move(m);
  return y;
}

template <typename T>
BasicTensor<T> DropoutBackward(const BasicTensor<T>& grad_out,
                               const std::vector<std::uint8_t>& mask, double rate) {
  if (mask.size() != grad_out.size()) ShapeError("dropout backward", "mask size mismatch");
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  BasicTensor<T> g(grad_out.dims());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = mask[i] ? grad_out[i] * scale : T(0);
  return g;
}

// --- loss / optimizer -----------------------------------------------------------

template <typename T>
LossResult<T> MseLoss(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  if (!pred.SameShape(target))
    ShapeError("mse", "prediction " + pred.ShapeString() + " vs target " + target.ShapeString());
  const double b = pred.dim(0);
  LossResult<T> r;
  r.grad = BasicTensor<T>(pred.dims());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - target[i];
    acc += d * d;
    r.grad[i] = static_cast<T>(2.0 * d / b);
  }
  r.value = acc / b;
  return r;
}

template <typename T>
void RmsPropStep(BasicTensor<T>& param, const BasicTensor<T>& grad, BasicTensor<T>& accumulator,
                 const RmsPropOptions& opts) {
  if (!param.SameShape(grad) || !param.SameShape(accumulator))
    ShapeError("rmsprop", "parameter/gradient/accumulator shapes differ");
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double v = opts.rho * accumulator[i] + (1.0 - opts.rho) * g * g;
    accumulator[i] = static_cast<T>(v);
    param[i] = static_cast<T>(param[i] - opts.learning_rate * g / (std::sqrt(v) + opts.epsilon));
  }
}

#define AVSE_INSTANTIATE_OPS(T)                                                                \
  template BasicTensor<T> Conv2dForward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                        const BasicTensor<T>&, ConvCache<T>*);                 \
  template ConvGrads<T> Conv2dBackward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                       const ConvCache<T>&);                                   \
  template BasicTensor<T> MaxPoolForward(const BasicTensor<T>&, int, int, PoolCache*);         \
  template BasicTensor<T> MaxPoolBackward(const BasicTensor<T>&, const PoolCache&);            \
  template BasicTensor<T> DenseForward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                       const BasicTensor<T>&);                                 \
  template DenseGrads<T> DenseBackward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                       const BasicTensor<T>&);                                 \
  template BasicTensor<T> ActivationForward(const BasicTensor<T>&, Activation);                \
  template BasicTensor<T> ActivationBackward(const BasicTensor<T>&, const BasicTensor<T>&,     \
                                             Activation);                                      \
  template BasicTensor<T> FcForward(const BasicTensor<T>&, const BasicTensor<T>&,              \
                                    const BasicTensor<T>&, Activation);                        \
  template struct BatchNormState<T>;                                                           \
  template BasicTensor<T> BatchNormForward(const BasicTensor<T>&, BatchNormState<T>&, Mode,    \
                                           const BatchNormOptions&, BatchNormCache<T>*);       \
  template BatchNormGrads<T> BatchNormBackward(const BasicTensor<T>&, const BasicTensor<T>&,   \
                                               const BatchNormCache<T>&);                      \
  template BasicTensor<T> DropoutForward(const BasicTensor<T>&, double, Rng&, Mode,            \
                                         std::vector<std::uint8_t>*);                          \
  template BasicTensor<T> DropoutBackward(const BasicTensor<T>&,                               \
                                          const std::vector<std::uint8_t>&, double);           \
  template LossResult<T> MseLoss(const BasicTensor<T>&, const BasicTensor<T>&);                \
  template void RmsPropStep(BasicTensor<T>&, const BasicTensor<T>&, BasicTensor<T>&,           \
                            const RmsPropOptions&);

AVSE_INSTANTIATE_OPS(float)
AVSE_INSTANTIATE_OPS(double)

#undef AVSE_INSTANTIATE_OPS

}  // namespace avse::nn
