#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lif {

enum class ErrorKind {
  kIo,
  kBadMagic,
  kBadVersion,
  kTruncated,
  kAttributeMismatch,
  kParse,
  kPrecondition,
  kInvalidValue,
  kEmptyIndex,
  kOutOfRange,
  kDegenerateGeometry,
  kRegistrationFailure,
  kNonConvergence,
};

const char* to_string(ErrorKind kind);

/// Base exception for everything the library throws. The kind lets callers
/// (and the CLI) distinguish failure classes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Power iteration ran out of iterations before meeting its residual bound.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double residual)
      : Error(ErrorKind::kNonConvergence, what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Wraps a failure inside a batched or per-pair computation with the index of
/// the failing element.
class IndexedError : public Error {
 public:
  IndexedError(ErrorKind kind, const std::string& what, std::size_t index)
      : Error(kind, what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace lif
