#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chop {

enum class ErrorCode {
  kInvalidParameter,
  kImageTooSmall,
  kInvalidInput,
  kUnknownPair,
  kEmptyGraph,
  kNoFeatures,
  kConfigMismatch,
  kDimensionMismatch,
  kDatasetNotFound,
  kUnreadableImage,
  kVersionMismatch,
  kArtifactCorrupt,
  kConfigInvalid,
  kProtocolUnknown,
  kMissingArtifacts,
};

// Kebab-case identifier printed in diagnostics, e.g. "dataset-not-found".
std::string_view error_slug(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chop
