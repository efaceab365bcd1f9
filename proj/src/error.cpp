#include "chop/error.hpp"

namespace chop {

std::string_view error_slug(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kImageTooSmall: return "image-too-small";
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kUnknownPair: return "unknown-pair";
    case ErrorCode::kEmptyGraph: return "empty-graph";
    case ErrorCode::kNoFeatures: return "no-features";
    case ErrorCode::kConfigMismatch: return "config-mismatch";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kDatasetNotFound: return "dataset-not-found";
    case ErrorCode::kUnreadableImage: return "unreadable-image";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kArtifactCorrupt: return "artifact-corrupt";
    case ErrorCode::kConfigInvalid: return "config-invalid";
    case ErrorCode::kProtocolUnknown: return "protocol-unknown";
    case ErrorCode::kMissingArtifacts: return "missing-artifacts";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_slug(code)) + ": " + detail), code_(code) {}

}  // namespace chop
