#pragma once

#include <stdexcept>
#include <string>

namespace oobnet {

// Every failure raised by the library carries one of these codes so callers
// (and the CLI exit-code mapping) can tell failures apart without parsing
// message text.
enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kMissingCache,
  kNonFinite,
  // Image and file decoding.
  kBadMagic,
  kBadMaxval,
  kBadHeader,
  kShortData,
  kIo,
  kMissingFile,
  // Checkpoints.
  kVersionMismatch,
  kTruncated,
  kTrailingData,
  kConfigMismatch,
  // Manifests, annotations, splits.
  kBadCsv,
  kNonMonotonicTimestamps,
  kNonBinaryLabel,
  kDuplicateIndex,
  kIndexOutOfRange,
  kCountMismatch,
  kDuplicateVideo,
  kEmptyDataset,
  kSingleClass,
};

enum class ErrorCategory { kUsage, kData, kNumeric };

const char* to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace oobnet
