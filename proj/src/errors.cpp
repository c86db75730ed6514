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

#include "anyword/errors.hpp"

namespace anyword {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyExpression: return "EmptyExpression";
    case ErrorCode::kNoEntityFound: return "NoEntityFound";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kInsufficientSynonyms: return "InsufficientSynonyms";
    case ErrorCode::kScheduleMismatch: return "ScheduleMismatch";
    case ErrorCode::kNonFiniteLatent: return "NonFiniteLatent";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kEncoderUnavailable: return "EncoderUnavailable";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptySampleSet: return "EmptySampleSet";
    case ErrorCode::kAdapterMismatch: return "AdapterMismatch";
    case ErrorCode::kDegenerateMap: return "DegenerateMap";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kNoExteriorCells: return "NoExteriorCells";
    case ErrorCode::kInvalidPrompt: return "InvalidPrompt";
    case ErrorCode::kMissingEntityMask: return "MissingEntityMask";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace anyword
