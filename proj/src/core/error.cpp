// Copyright 2026 The advdet Authors
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

#include "core/error.hpp"

namespace advdet {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kNotWav: return "NotWav";
    case ErrorCode::kUnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::kUnsupportedChannels: return "UnsupportedChannels";
    case ErrorCode::kUnsupportedRate: return "UnsupportedRate";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kBadCoeffCount: return "BadCoeffCount";
    case ErrorCode::kBadSpec: return "BadSpec";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kGeometryMismatch: return "GeometryMismatch";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kNoSpeech: return "NoSpeech";
    case ErrorCode::kSilentSpeech: return "SilentSpeech";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kMissingCache: return "MissingCache";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kInternal: return "InternalError";
    case ErrorCode::kDataFailures: return "DataFailures";
  }
  return "Unknown";
}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, std::string(ErrorCodeName(code)) + ": " + message);
}

}  // namespace advdet
