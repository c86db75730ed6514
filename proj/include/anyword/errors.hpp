// Copyright 2026 The Anyword Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anyword {

enum class ErrorCode {
  kInvalidArgument,
  kEmptyExpression,
  kNoEntityFound,
  kBackendUnavailable,
  kInsufficientSynonyms,
  kScheduleMismatch,
  kNonFiniteLatent,
  kShapeMismatch,
  kBackendFailure,
  kIndexOutOfRange,
  kEncoderUnavailable,
  kNonFiniteLoss,
  kEmptySampleSet,
  kAdapterMismatch,
  kDegenerateMap,
  kEmptyMask,
  kNoExteriorCells,
  kInvalidPrompt,
  kMissingEntityMask,
  kEmptyDataset,
  kLengthMismatch,
  kProtocolError,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure surfaced by the library is an anyword::Error carrying a code.
// `detail` holds auxiliary payload such as a raw backend reply.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace anyword
