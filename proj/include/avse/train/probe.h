#ifndef AVSE_TRAIN_PROBE_H_
#define AVSE_TRAIN_PROBE_H_

#include <string>
#include <vector>

#include "avse/dsp/waveform.h"
#include "avse/model/avse_model.h"
#include "avse/visual/image.h"

namespace avse::train {

struct TestUtterance {
  std::string id;
  dsp::Waveform clean;
  dsp::Waveform noisy;
  std::vector<visual::MouthImage> frames;  // raw mouth images
};

struct EnhancementScore {
  double stoi = 0.0;
  double sdi = 0.0;
};

// Enhances `u` (with `frames` replacing its own video when non-null) and
// scores the result against the clean signal.
EnhancementScore ScoreEnhancement(model::Model& m, const TestUtterance& u,
                                  const std::vector<visual::MouthImage>* frames = nullptr);

// Mean STOI / SDI over a test set.
EnhancementScore MeanScore(model::Model& m, const std::vector<TestUtterance>& set);

struct ProbeResult {
  EnhancementScore correct;
  EnhancementScore fake;
};

// Enhancement with the true mouth sequence versus the same utterance with
// every frame replaced by `fake`.
ProbeResult MismatchedVisualProbe(model::Model& m, const TestUtterance& u,
                                  const visual::MouthImage& fake);

// Averages MismatchedVisualProbe over a set.
ProbeResult MismatchedVisualProbe(model::Model& m, const std::vector<TestUtterance>& set,
                                  const visual::MouthImage& fake);

}  // namespace avse::train

#endif  // AVSE_TRAIN_PROBE_H_
