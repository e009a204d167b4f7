#ifndef AVSE_CORE_ERROR_H_
#define AVSE_CORE_ERROR_H_

#include <stdexcept>
#include <string>

namespace avse {

// All recoverable failures in the library are reported with this type (or a
// subclass), so tools can map them to a nonzero exit status.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a numeric pipeline produces NaN/Inf.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what) {}
};

void Warn(const std::string& message);
void Info(const std::string& message);

// Silences Info() output; warnings are always printed.
void SetVerbose(bool verbose);

}  // namespace avse

#endif  // AVSE_CORE_ERROR_H_
