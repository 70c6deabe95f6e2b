#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace npspec {

enum class ErrorKind {
  NonResolved,
  OutOfDomain,
  DomainMismatch,
  EmptyInput,
  ShapeMismatch,
  ZeroMatrix,
  RankDeficient,
  DegenerateData,
  DegenerateState,
  TooShort,
  ZeroProbabilityHistory,
  ConstructionFailed,
  Validation,
  Io,
  Parse,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace npspec
