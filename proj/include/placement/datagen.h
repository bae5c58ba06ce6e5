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
#ifndef PLACEMENT_DATAGEN_H_
#define PLACEMENT_DATAGEN_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "placement/graph.h"

namespace placement {

enum class Family { kBranchBlocks, kEncoderDecoder, kLayeredRandom };

std::string FamilyName(Family family);
Family FamilyFromName(const std::string& name);

struct IntRange {
  int lo = 1;
  int hi = 1;
};

struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

// Parameters of a seeded graph family.
//
// branch_blocks: a source op followed by `blocks` blocks; each block fans out
//   into `branches` parallel chains of `ops_per_branch` ops that join in one
//   op, which feeds the next block.
//   |V| = 1 + sum over blocks of (ops in its branches + 1).
// encoder_decoder: encoder and decoder stacks of `layers` x `steps` cells
//   with edges along time and depth, encoder state handed to the decoder at
//   step 0, and one attention op per decoder step that reads every top
//   encoder cell and the top decoder cell and feeds the next decoder step.
//   |V| = 2 * layers * steps + steps.
// layered_random: `layers` layers of `width` ops; every op past the first
//   layer has at least one parent in the previous layer, further
//   previous-layer edges appear with probability `edge_probability`.
//   |V| = sum of layer widths.
struct FamilySpec {
  Family family = Family::kBranchBlocks;
  int count = 32;
  double train_fraction = 0.5;
  int blocks = 2;
  IntRange branches{2, 3};
  IntRange ops_per_branch{2, 4};
  IntRange layers{2, 3};
  IntRange steps{3, 5};
  IntRange width{2, 4};
  double edge_probability = 0.3;
  RealRange compute_seconds{0.5, 2.0};
  RealRange output_bytes{1e6, 1e8};
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static FamilySpec FromJson(const nlohmann::json& doc);
};

// Graph i is drawn from its own stream DeriveSeed(seed, i) and is named
// "<family>_<i>".
std::vector<ComputationGraph> GenerateFamily(const FamilySpec& spec);
ComputationGraph GenerateGraph(const FamilySpec& spec, int index);

struct SplitResult {
  std::vector<int> train;  // indices into the input list
  std::vector<int> test;
};

// Seeded shuffle; the first ceil(f * N) go to train.
SplitResult Split(int count, double fraction, std::uint64_t seed);

struct Dataset {
  FamilySpec spec;
  std::vector<ComputationGraph> graphs;
  SplitResult split;
};

Dataset MakeDataset(const FamilySpec& spec);

// Writes graphs/<name>.json and manifest.json under `dir`.
void WriteDataset(const Dataset& dataset, const std::string& dir);
Dataset LoadDataset(const std::string& dir);

}  // namespace placement

#endif  // PLACEMENT_DATAGEN_H_
