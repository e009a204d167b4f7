#ifndef AVSE_NN_CHECKPOINT_H_
#define AVSE_NN_CHECKPOINT_H_

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "avse/core/tensor.h"
#include "avse/nn/layers.h"

namespace avse::nn {

// Checkpoint directory layout:
//   index.txt      "@key=value" header lines, then one "name dims file" line
//                  per tensor (dims like 12x2x1x10)
//   <name>.tnsr    one TNSR file per tensor
struct Checkpoint {
  std::map<std::string, std::string> header;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* Find(const std::string& name) const;
};

inline constexpr const char* kCheckpointIndex = "index.txt";

void SaveCheckpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& dir);

// Copies `params` (values only) into checkpoint entries, in order.
void AppendParameters(Checkpoint& ckpt, const std::vector<Parameter<float>*>& params,
                      const std::string& prefix = "");

// Restores every parameter by name; missing names or mismatched dims throw.
void RestoreParameters(const Checkpoint& ckpt, const std::vector<Parameter<float>*>& params,
                       const std::string& prefix = "");

}  // namespace avse::nn

#endif  // AVSE_NN_CHECKPOINT_H_
