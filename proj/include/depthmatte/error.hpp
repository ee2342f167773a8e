#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace depthmatte {

enum class Errc {
  size_mismatch,
  io_failure,
  decode_failure,
  bad_target,
  bad_kernel,
  dimension_mismatch,
  source_exhausted,
  validation_error,
  bind_failure,
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::size_mismatch: return "SizeMismatch";
    case Errc::io_failure: return "IoFailure";
    case Errc::decode_failure: return "DecodeFailure";
    case Errc::bad_target: return "BadTarget";
    case Errc::bad_kernel: return "BadKernel";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::source_exhausted: return "SourceExhausted";
    case Errc::validation_error: return "ValidationError";
    case Errc::bind_failure: return "BindFailure";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The code is the
/// machine-readable part; what() carries the human diagnostic.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 protected:
  struct Verbatim {};
  Error(Verbatim, Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

 private:
  Errc code_;
};

struct FieldError {
  std::string field;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<FieldError> fields)
      : Error(Errc::validation_error, describe(fields)), fields_(std::move(fields)) {}
  ValidationError(std::string field, std::string message)
      : ValidationError(std::vector<FieldError>{{std::move(field), std::move(message)}}) {}

  const std::vector<FieldError>& fields() const noexcept { return fields_; }

 private:
  static std::string describe(const std::vector<FieldError>& fields) {
    std::string out;
    for (const auto& f : fields) {
      if (!out.empty()) out += "; ";
      out += f.field + ": " + f.message;
    }
    return out;
  }

  std::vector<FieldError> fields_;
};

/// A stage error re-raised by the stream driver with the frame it hit.
class FrameError : public Error {
 public:
  FrameError(const Error& cause, std::uint64_t frame_index)
      : Error(Verbatim{}, cause.code(), "frame " + std::to_string(frame_index) + ": " + cause.what()),
        frame_index_(frame_index) {}

  std::uint64_t frame_index() const noexcept { return frame_index_; }

 private:
  std::uint64_t frame_index_;
};

}  // namespace depthmatte
