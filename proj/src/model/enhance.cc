#include "avse/model/enhance.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "avse/core/error.h"
#include "avse/dsp/stft.h"

namespace avse::model {

UtteranceFeatures PrepareUtterance(const dsp::Waveform& noisy,
                                   const std::vector<visual::MouthImage>* images,
                                   const dsp::Waveform* clean) {
  noisy.Validate();
  UtteranceFeatures f;
  f.num_samples = noisy.size();
  dsp::SpectroFrames spec = dsp::Stft(noisy);
  int frames = spec.num_frames();
  if (images) {
    const int video = static_cast<int>(images->size());
    if (video == 0) throw Error("utterance has no video frames");
    if (std::abs(video - frames) > kMaxFrameSlack)
      throw Error("stream misalignment: " + std::to_string(frames) + " audio frames vs " +
                  std::to_string(video) + " video frames");
    frames = visual::AlignStreams(frames, video);
  }
  // Statistics cover every audio frame; truncation only drops network rows.
  auto [norm, stats] = dsp::NormalizeUtterance(spec.logpow);
  f.stats = stats;
  Tensor ctx = dsp::ContextWindow(norm);
  f.x = Tensor({frames, kAudioDim, kAudioContext, 1},
               std::vector<float>(ctx.data(), ctx.data() + static_cast<std::size_t>(frames) *
                                                              kAudioDim * kAudioContext));
  f.phase = Tensor({frames, kAudioDim},
                   std::vector<float>(spec.phase.data(),
                                      spec.phase.data() + static_cast<std::size_t>(frames) * kAudioDim));
  if (clean) {
    if (clean->size() != noisy.size())
      throw Error("clean and noisy lengths differ (" + std::to_string(clean->size()) + " vs " +
                  std::to_string(noisy.size()) + ")");
    Tensor y = dsp::ApplyNormalization(dsp::Stft(*clean).logpow, stats);
    f.y = Tensor({frames, kAudioDim},
                 std::vector<float>(y.data(), y.data() + static_cast<std::size_t>(frames) * kAudioDim));
  }
  if (images) {
    std::vector<visual::MouthImage> normalized;
    normalized.reserve(images->size());
    for (const visual::MouthImage& img : *images) {
      auto [n, s] = visual::NormalizeImageWithStats(img);
      normalized.push_back(std::move(n));
      f.image_stats.push_back(s);
    }
    f.image_stats.resize(frames);
    f.z = Tensor({frames, 16, 24, 15});
    f.zc = Tensor({frames, kVisualDim});
    for (int t = 0; t < frames; ++t) {
      // Context frames come from the full video so edge replication only
      // happens at the true ends of the sequence.
      Tensor stack = visual::VisualContext(normalized, t);
      std::copy(stack.data(), stack.data() + stack.size(), f.z.row(t).begin());
      const Tensor& centre = normalized[t].pixels;
      std::copy(centre.data(), centre.data() + centre.size(), f.zc.row(t).begin());
    }
  }
  return f;
}

namespace {

Tensor SliceRows(const Tensor& t, int begin, int end) {
  if (t.empty()) return Tensor();
  Dims d = t.dims();
  d[0] = end - begin;
  const std::size_t stride = t.size() / t.dim(0);
  return Tensor(d, std::vector<float>(t.data() + begin * stride, t.data() + end * stride));
}

}  // namespace

Batch SliceBatch(const UtteranceFeatures& f, int begin, int end) {
  if (begin < 0 || end > f.frames() || begin >= end) throw Error("bad batch slice");
  return {SliceRows(f.x, begin, end), SliceRows(f.z, begin, end), SliceRows(f.y, begin, end),
          SliceRows(f.zc, begin, end)};
}

ModelOutput<float> PredictFeatures(Model& model, const UtteranceFeatures& f, int batch_size) {
  if (model.uses_visual_input() && f.z.empty())
    throw Error(ModelKindName(model.kind()) + " needs mouth images");
  const int frames = f.frames();
  ModelOutput<float> out;
  out.audio = Tensor({frames, kAudioDim});
  if (model.has_visual_head()) out.visual = Tensor({frames, kVisualDim});
  nn::ForwardContext ctx{nn::Mode::kInference, nullptr};
  for (int b = 0; b < frames; b += batch_size) {
    const int e = std::min(frames, b + batch_size);
    Batch batch = SliceBatch(f, b, e);
    ModelOutput<float> o = model.Forward(batch.x, batch.z, ctx);
    RequireFinite(o.audio, "enhanced features");
    std::copy(o.audio.data(), o.audio.data() + o.audio.size(), out.audio.row(b).begin());
    if (!o.visual.empty())
      std::copy(o.visual.data(), o.visual.data() + o.visual.size(), out.visual.row(b).begin());
  }
  return out;
}

EnhanceResult EnhanceFeatures(Model& model, const UtteranceFeatures& f, int batch_size) {
  ModelOutput<float> o = PredictFeatures(model, f, batch_size);
  EnhanceResult r;
  r.logpow = dsp::Denormalize(o.audio, f.stats);
  dsp::Waveform w = dsp::Istft(dsp::MagnitudeFromLogPower(r.logpow), f.phase);
  w.samples.resize(f.num_samples, 0.0f);
  r.enhanced = std::move(w);
  if (!o.visual.empty()) {
    for (int t = 0; t < f.frames(); ++t) {
      Tensor px({16, 24, 3}, std::vector<float>(o.visual.row(t).begin(), o.visual.row(t).end()));
      r.mouths.push_back(visual::UnnormalizeImage(px, f.image_stats[t]));
    }
  }
  return r;
}

EnhanceResult EnhanceUtterance(Model& model, const dsp::Waveform& noisy,
                               const std::vector<visual::MouthImage>& images, int batch_size) {
  const bool visual = model.uses_visual_input();
  UtteranceFeatures f = PrepareUtterance(noisy, visual ? &images : nullptr);
  return EnhanceFeatures(model, f, batch_size);
}

}  // namespace avse::model
