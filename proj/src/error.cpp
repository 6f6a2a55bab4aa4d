#include "oobnet/error.hpp"

namespace oobnet {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kMissingCache: return "missing cached state";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kBadMaxval: return "bad maxval";
    case ErrorCode::kBadHeader: return "bad header";
    case ErrorCode::kShortData: return "short data";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kMissingFile: return "missing file";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kTrailingData: return "trailing data";
    case ErrorCode::kConfigMismatch: return "config mismatch";
    case ErrorCode::kBadCsv: return "bad csv";
    case ErrorCode::kNonMonotonicTimestamps: return "non-monotonic timestamps";
    case ErrorCode::kNonBinaryLabel: return "non-binary label";
    case ErrorCode::kDuplicateIndex: return "duplicate index";
    case ErrorCode::kIndexOutOfRange: return "index out of range";
    case ErrorCode::kCountMismatch: return "count mismatch";
    case ErrorCode::kDuplicateVideo: return "duplicate video";
    case ErrorCode::kEmptyDataset: return "empty dataset";
    case ErrorCode::kSingleClass: return "single class";
  }
  return "unknown error";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return ErrorCategory::kUsage;
    case ErrorCode::kNonFinite:
      return ErrorCategory::kNumeric;
    default:
      return ErrorCategory::kData;
  }
}

}  // namespace oobnet
