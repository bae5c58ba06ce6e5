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
#ifndef PLACEMENT_TOOLS_CLI_H_
#define PLACEMENT_TOOLS_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "placement/datagen.h"
#include "placement/env.h"
#include "placement/policy.h"
#include "placement/topology.h"
#include "placement/trainer.h"

namespace placement::cli {

// Everything `train` needs, from one JSON document. Exactly one of
// dataset / family / graphs names the training graphs.
struct RunConfig {
  // Path to a topology document, or the topology inline.
  nlohmann::json topology;
  std::string dataset;  // dataset directory written by `datagen`
  std::optional<FamilySpec> family;
  std::vector<std::string> graphs;  // graph document paths
  // Which members of a dataset or family to train on: train, test or all.
  std::string split = "train";
  RewardConfig reward;
  PolicyConfig policy;
  TrainerConfig trainer;
  std::string out;

  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& doc);
};

// Graph drawn as DOT with one fill colour per device.
std::string PlacementToDot(const ComputationGraph& graph,
                           const Placement& placement);

// Runs one command line. Errors print one line to `err` and return nonzero.
int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace placement::cli

#endif  // PLACEMENT_TOOLS_CLI_H_
