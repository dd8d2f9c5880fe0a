#pragma once

#include <stdexcept>
#include <string>

namespace gpr {

enum class ErrorKind {
  InvalidInput,     // non-finite or negative data, bad arguments
  Shape,            // grid / geometry mismatch
  Config,           // invalid configuration values
  Io,               // unreadable / unwritable files, malformed containers
  Magnitude,        // velocity field too large for scaling and squaring
  UndefinedMetric,  // metric not defined for the supplied inputs
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace gpr
