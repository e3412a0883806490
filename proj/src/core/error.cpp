#include "oad/core/error.hpp"

namespace oad {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kDegenerateHeatmap: return "degenerate-heatmap";
    case ErrorCode::kDegenerateBone: return "degenerate-bone";
    case ErrorCode::kDegenerateHeading: return "degenerate-heading";
    case ErrorCode::kDegeneracy: return "degeneracy";
    case ErrorCode::kUnsupported: return "unsupported-operation";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kInvalidState: return "invalid-state";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kModelContract: return "model-contract";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kLabel: return "label";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kService: return "service";
    case ErrorCode::kPredictor: return "predictor";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + " error: " + message), code_(code) {}

ParseError::ParseError(const std::string& message, std::string raw_response)
    : Error(ErrorCode::kParse, message), raw_(std::move(raw_response)) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace oad
