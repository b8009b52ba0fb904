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
#include "lmpnn/error.hpp"

namespace lmpnn {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kRange: return "range_error";
    case ErrorCode::kConfig: return "config_error";
    case ErrorCode::kShape: return "shape_error";
    case ErrorCode::kStructure: return "structure_error";
    case ErrorCode::kDepth: return "depth_error";
    case ErrorCode::kCapacity: return "capacity_error";
    case ErrorCode::kSampling: return "sampling_error";
    case ErrorCode::kLookup: return "lookup_error";
    case ErrorCode::kNumeric: return "numeric_error";
    case ErrorCode::kTraining: return "training_error";
    case ErrorCode::kProtocol: return "protocol_error";
    case ErrorCode::kVerification: return "verification_error";
    case ErrorCode::kOptimization: return "optimization_error";
    case ErrorCode::kArgument: return "argument_error";
  }
  return "unknown_error";
}

}  // namespace lmpnn
