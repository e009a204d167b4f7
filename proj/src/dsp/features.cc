#include "avse/dsp/features.h"

#include <algorithm>
#include <cmath>

#include "avse/core/error.h"

namespace avse::dsp {

Tensor NormStats::ToTensor() const {
  Tensor t({2, dim()});
  for (int k = 0; k < dim(); ++k) {
    t.at(0, k) = mean[k];
    t.at(1, k) = std[k];
  }
  return t;
}

NormStats NormStats::FromTensor(const Tensor& t) {
  if (t.rank() != 2 || t.dim(0) != 2) throw Error("NormStats tensor must be 2 x D");
  NormStats s;
  for (int k = 0; k < t.dim(1); ++k) {
    s.mean.push_back(t.at(0, k));
    s.std.push_back(t.at(1, k));
    if (!(s.std.back() > 0.0f)) throw Error("NormStats std must be positive");
  }
  return s;
}

NormStats ComputeNormStats(const Tensor& logpow) {
  if (logpow.rank() != 2) throw Error("normalize: expected T x D frames");
  const int frames = logpow.dim(0), dim = logpow.dim(1);
  if (frames < 2)
    throw Error("normalize: insufficient frames (" + std::to_string(frames) +
                ", need at least 2)");
  NormStats s{std::vector<float>(dim), std::vector<float>(dim)};
  for (int k = 0; k < dim; ++k) {
    double sum = 0.0;
    for (int t = 0; t < frames; ++t) sum += logpow.at(t, k);
    const double mean = sum / frames;
    double ss = 0.0;
    for (int t = 0; t < frames; ++t) {
      double d = logpow.at(t, k) - mean;
      ss += d * d;
    }
    s.mean[k] = static_cast<float>(mean);
    s.std[k] = static_cast<float>(std::max(std::sqrt(ss / frames), kStdFloor));
  }
  return s;
}

Tensor ApplyNormalization(const Tensor& logpow, const NormStats& stats) {
  if (logpow.rank() != 2 || logpow.dim(1) != stats.dim())
    throw Error("normalize: stats dimension mismatch");
  Tensor out(logpow.dims());
  for (int t = 0; t < logpow.dim(0); ++t)
    for (int k = 0; k < logpow.dim(1); ++k)
      out.at(t, k) = static_cast<float>(
          (static_cast<double>(logpow.at(t, k)) - stats.mean[k]) / stats.std[k]);
  return out;
}

std::pair<Tensor, NormStats> NormalizeUtterance(const Tensor& logpow) {
  NormStats stats = ComputeNormStats(logpow);
  return {ApplyNormalization(logpow, stats), std::move(stats)};
}

Tensor Denormalize(const Tensor& normalized, const NormStats& stats) {
  if (normalized.rank() != 2 || normalized.dim(1) != stats.dim())
    throw Error("denormalize: stats dimension mismatch");
  Tensor out(normalized.dims());
  for (int t = 0; t < normalized.dim(0); ++t)
    for (int k = 0; k < normalized.dim(1); ++k)
      out.at(t, k) = static_cast<float>(
          static_cast<double>(normalized.at(t, k)) * stats.std[k] + stats.mean[k]);
  return out;
}

Tensor ContextWindow(const Tensor& frames) {
  if (frames.rank() != 2) throw Error("context window: expected T x D frames");
  const int n = frames.dim(0), dim = frames.dim(1);
  Tensor out({n, dim, kContextWidth});
  for (int t = 0; t < n; ++t)
    for (int j = 0; j < kContextWidth; ++j) {
      int src = std::clamp(t + j - kContextRadius, 0, n - 1);
      for (int k = 0; k < dim; ++k) out.at(t, k, j) = frames.at(src, k);
    }
  return out;
}

}  // namespace avse::dsp
