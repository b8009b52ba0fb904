// Copyright 2026 The lmpnn Authors
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

namespace lmpnn {

// Stable error categories. The CLI prints the name as a machine-parsable code.
enum class ErrorCode {
  kIo,
  kParse,
  kRange,
  kConfig,
  kShape,
  kStructure,
  kDepth,
  kCapacity,
  kSampling,
  kLookup,
  kNumeric,
  kTraining,
  kProtocol,
  kVerification,
  kOptimization,
  kArgument,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lmpnn
