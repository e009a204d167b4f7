#include "avse/core/error.h"

#include <atomic>
#include <iostream>

namespace avse {

namespace {
std::atomic<bool> g_verbose{true};
}

void SetVerbose(bool verbose) { g_verbose = verbose; }

void Warn(const std::string& message) {
  std::cerr << "WARNING: " << message << '\n';
}

void Info(const std::string& message) {
  if (g_verbose) std::cerr << "LOG: " << message << '\n';
}

}  // namespace avse
