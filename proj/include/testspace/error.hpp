#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace testspace {

enum class ErrorKind {
  validation,    // bad input or violated precondition
  cap_exceeded,  // configured size/enumeration budget hit
  undecided,     // numerical procedure could not decide
  io,
  internal,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a computation needs distinct images for a pair that coincides,
/// or needs a path between a pair that has none.
class PairError : public Error {
 public:
  PairError(ErrorKind kind, const std::string& message, std::size_t first, std::size_t second)
      : Error(kind, message), pair_(first, second) {}

  const std::pair<std::size_t, std::size_t>& pair() const noexcept { return pair_; }

 private:
  std::pair<std::size_t, std::size_t> pair_;
};

}  // namespace testspace
