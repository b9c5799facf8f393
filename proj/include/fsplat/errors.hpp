#pragma once

#include <stdexcept>
#include <string>

namespace fsplat {

/// Error category, used by the CLI to pick an exit code and by callers that
/// need to distinguish bad input from bad files from failed numerics.
enum class ErrorKind {
  kValidation,  ///< precondition or invariant violated by caller input
  kOutOfFov,    ///< geometric query outside the camera's angular domain
  kIo,          ///< file missing, unreadable, malformed, or unwritable
  kNumerical,   ///< a numeric procedure failed (non-SPD matrix, unreliable oracle)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_validation(const std::string& what) {
  throw Error(ErrorKind::kValidation, what);
}

[[noreturn]] inline void throw_out_of_fov(const std::string& what) {
  throw Error(ErrorKind::kOutOfFov, what);
}

[[noreturn]] inline void throw_io(const std::string& what) {
  throw Error(ErrorKind::kIo, what);
}

[[noreturn]] inline void throw_numerical(const std::string& what) {
  throw Error(ErrorKind::kNumerical, what);
}

}  // namespace fsplat
