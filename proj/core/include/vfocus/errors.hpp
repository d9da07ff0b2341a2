#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace vfocus {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied inputs that violate a precondition (dimensions, ranges, empty sets).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// File could not be read, decoded or written.
class IoError : public Error {
 public:
  using Error::Error;
};

enum class PredictorFailure {
  Transport,  // process died, connection refused, broken pipe
  Malformed,  // response was not valid protocol JSON
  Timeout,
  Model,      // the remote side answered with an explicit error
};

class PredictorError : public Error {
 public:
  PredictorError(PredictorFailure kind, const std::string& message,
                 std::optional<std::size_t> batch_index = std::nullopt)
      : Error(message), kind_(kind), batch_index_(batch_index) {}

  PredictorFailure kind() const noexcept { return kind_; }

  /// Position of the failing item when raised from predict_batch.
  std::optional<std::size_t> batch_index() const noexcept { return batch_index_; }

 private:
  PredictorFailure kind_;
  std::optional<std::size_t> batch_index_;
};

const char* to_string(PredictorFailure kind) noexcept;

}  // namespace vfocus
