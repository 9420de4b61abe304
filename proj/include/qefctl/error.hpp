#pragma once

#include <stdexcept>
#include <string>

namespace qefctl {

// Stable failure categories. The CLI maps these onto process exit codes.
enum class ErrorCategory {
  kValidation,    // malformed instance or violated structural invariant
  kInadmissible,  // controller not stabilizing or risk parameter too large
  kNumerical,     // solver, quadrature or factorization failure
  kIo,            // file or parse failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kValidation:
      return "validation";
    case ErrorCategory::kInadmissible:
      return "inadmissible";
    case ErrorCategory::kNumerical:
      return "numerical";
    case ErrorCategory::kIo:
      return "io";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorCategory c, const std::string& what) {
  throw Error(c, what);
}

}  // namespace qefctl
