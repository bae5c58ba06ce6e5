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
#ifndef PLACEMENT_CHECKPOINT_H_
#define PLACEMENT_CHECKPOINT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "placement/nn.h"
#include "placement/policy.h"

namespace placement {

inline constexpr std::string_view kCheckpointFormat =
    "placement-opt-checkpoint/v1";

struct Checkpoint {
  PolicyConfig policy;
  PolicyParameters params;
  std::optional<nn::AdamState> optimizer;
  std::string rng_state;  // empty if not recorded
  std::int64_t epochs_completed = 0;
};

nlohmann::json CheckpointToJson(const Checkpoint& checkpoint);
// Rejects unknown format tags and parameters whose shapes do not match the
// recorded policy config.
Checkpoint CheckpointFromJson(const nlohmann::json& doc);

void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace placement

#endif  // PLACEMENT_CHECKPOINT_H_
