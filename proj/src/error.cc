/* Copyright 2026 The placement-opt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "placement/error.h"

namespace placement {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kDanglingEdge: return "dangling_edge";
    case ErrorCode::kCycle: return "cycle";
    case ErrorCode::kNegativeCost: return "negative_cost";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDeviceMismatch: return "device_mismatch";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kEpisodeDone: return "episode_done";
    case ErrorCode::kBudgetExceeded: return "budget_exceeded";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code),
      message_(message) {}

}  // namespace placement
