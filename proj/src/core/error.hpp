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

#pragma once

#include <stdexcept>
#include <string>

namespace advdet {

// Numeric values are shared with the C API status codes in advdet/advdet.h.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kIo = 2,
  kNotWav = 3,
  kUnsupportedEncoding = 4,
  kUnsupportedChannels = 5,
  kUnsupportedRate = 6,
  kEmptyInput = 7,
  kBadCoeffCount = 8,
  kBadSpec = 9,
  kShapeMismatch = 10,
  kTooShort = 11,
  kGeometryMismatch = 12,
  kParse = 13,
  kNoSpeech = 14,
  kSilentSpeech = 15,
  kLengthMismatch = 16,
  kDuplicateId = 17,
  kMissingCache = 18,
  kEmptySet = 19,
  kSingleClass = 20,
  kConfig = 21,
  kInternal = 22,
  kDataFailures = 23,  // some inputs failed; details in the failure manifest
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

}  // namespace advdet
