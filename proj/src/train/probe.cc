#include "avse/train/probe.h"

#include "avse/core/error.h"
#include "avse/metrics/objective.h"
#include "avse/model/enhance.h"

namespace avse::train {

EnhancementScore ScoreEnhancement(model::Model& m, const TestUtterance& u,
                                  const std::vector<visual::MouthImage>* frames) {
  const auto& video = frames ? *frames : u.frames;
  model::EnhanceResult r = model::EnhanceUtterance(m, u.noisy, video);
  return {metrics::Stoi(u.clean, r.enhanced), metrics::Sdi(u.clean, r.enhanced)};
}

EnhancementScore MeanScore(model::Model& m, const std::vector<TestUtterance>& set) {
  if (set.empty()) throw Error("empty test set");
  EnhancementScore s;
  for (const TestUtterance& u : set) {
    EnhancementScore e = ScoreEnhancement(m, u);
    s.stoi += e.stoi;
    s.sdi += e.sdi;
  }
  s.stoi /= set.size();
  s.sdi /= set.size();
  return s;
}

ProbeResult MismatchedVisualProbe(model::Model& m, const TestUtterance& u,
                                  const visual::MouthImage& fake) {
  if (!m.uses_visual_input()) throw Error("visual probe needs a model with visual input");
  std::vector<visual::MouthImage> constant(u.frames.size(), fake);
  return {ScoreEnhancement(m, u), ScoreEnhancement(m, u, &constant)};
}

ProbeResult MismatchedVisualProbe(model::Model& m, const std::vector<TestUtterance>& set,
                                  const visual::MouthImage& fake) {
  if (set.empty()) throw Error("empty test set");
  ProbeResult acc;
  for (const TestUtterance& u : set) {
    ProbeResult r = MismatchedVisualProbe(m, u, fake);
    acc.correct.stoi += r.correct.stoi;
    acc.correct.sdi += r.correct.sdi;
    acc.fake.stoi += r.fake.stoi;
    acc.fake.sdi += r.fake.sdi;
  }
  const double n = static_cast<double>(set.size());
  acc.correct.stoi /= n;
  acc.correct.sdi /= n;
  acc.fake.stoi /= n;
  acc.fake.sdi /= n;
  return acc;
}

}  // namespace avse::train
