// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_ERROR_HPP_
#define FVR_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace fvr {

enum class ErrorCode {
  kGimbalLock,
  kTooSmall,
  kOutOfBounds,
  kIo,
  kBadMagic,
  kDimensionMismatch,
  kZeroVariance,
  kEmptyBatch,
  kShapeMismatch,
  kNonFinite,
  kInvalidArgument,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fvr

#endif  // FVR_ERROR_HPP_
