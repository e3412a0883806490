#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oad {

enum class ErrorCode {
  kDimension,
  kInvalidInput,
  kDegenerateHeatmap,
  kDegenerateBone,
  kDegenerateHeading,
  kDegeneracy,
  kUnsupported,
  kInsufficientData,
  kInvalidState,
  kDivergence,
  kModelContract,
  kParse,
  kLabel,
  kConfig,
  kIo,
  kService,
  kPredictor,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is the
/// stable, machine-checkable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A completion service replied with text that names neither label.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string raw_response);

  const std::string& raw_response() const noexcept { return raw_; }

 private:
  std::string raw_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace oad
