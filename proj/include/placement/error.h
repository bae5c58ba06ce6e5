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
#ifndef PLACEMENT_ERROR_H_
#define PLACEMENT_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace placement {

enum class ErrorCode {
  kParse,
  kDuplicateId,
  kDanglingEdge,
  kCycle,
  kNegativeCost,
  kInvalidArgument,
  kDeviceMismatch,
  kShapeMismatch,
  kEpisodeDone,
  kBudgetExceeded,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures surface as this exception. what() is a single line of
// the form "<code>: <message>" so the CLI can print it verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }
  const std::string& message() const { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace placement

#endif  // PLACEMENT_ERROR_H_
