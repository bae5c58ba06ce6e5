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
#ifndef PLACEMENT_BASELINES_H_
#define PLACEMENT_BASELINES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "placement/env.h"
#include "placement/graph.h"
#include "placement/topology.h"

namespace placement {

Placement PlaceSingleDevice(const ComputationGraph& graph,
                            const DeviceTopology& topology);

// Independent uniform device per node.
Placement PlaceRandom(const ComputationGraph& graph,
                      const DeviceTopology& topology, std::uint64_t seed);

struct PartitionerConfig {
  // Allowed relative excess of a device's load over the mean load.
  double balance_tolerance = 0.05;
  int refinement_passes = 4;
};

struct MinCutResult {
  Placement placement;
  // Tolerance actually used; larger than requested after relaxation.
  double balance_tolerance = 0.0;
  // Cut bytes after the greedy pass and after every refinement pass.
  std::vector<double> cut_history;
  std::vector<std::string> warnings;
};

// Sum of output bytes over edges whose endpoints sit on different devices.
double CutBytes(const ComputationGraph& graph, const Placement& placement);
// Per-device compute seconds.
std::vector<double> DeviceLoads(const ComputationGraph& graph,
                                const DeviceTopology& topology,
                                const Placement& placement);
// (1 + eps) times the mean per-device load.
double BalanceBound(const ComputationGraph& graph,
                    const DeviceTopology& topology, double eps);

// Greedy growth in topological order onto the feasible device with the least
// added cut (then lower load, then lower id), followed by single-node moves
// that strictly reduce the cut without breaking the load bound. If some node
// fits nowhere, eps is raised to max(2 eps, 1/|V|) and the greedy restarts.
MinCutResult PlaceBalancedMinCut(const ComputationGraph& graph,
                                 const DeviceTopology& topology,
                                 const PartitionerConfig& cfg);

// Depth bands in order of depth, cut into |D| contiguous runs of roughly equal
// compute: a band whose cumulative-compute midpoint is m goes to device
// floor(m * |D| / total).
Placement PlaceExpertChain(const ComputationGraph& graph,
                           const DeviceTopology& topology);

inline constexpr std::uint64_t kDefaultSearchBudget = std::uint64_t{1} << 20;

struct SearchResult {
  Placement placement;
  double runtime = 0.0;
  std::uint64_t evaluated = 0;
};

// Every |D|^|V| placement; the lexicographically smallest among the optima.
// Throws Error(kBudgetExceeded) above `budget` placements.
SearchResult ExhaustiveSearch(const ComputationGraph& graph,
                              const DeviceTopology& topology,
                              const RewardConfig& reward,
                              std::uint64_t budget = kDefaultSearchBudget,
                              int threads = 1);

struct SchemeResult {
  std::string scheme;
  Placement placement;
  double makespan_seconds = 0.0;
  double peak_memory_bytes = 0.0;  // worst device
  double penalized_runtime = 0.0;
};

struct ComparisonOptions {
  std::uint64_t seed = 0;
  PartitionerConfig partitioner;
  std::uint64_t search_budget = kDefaultSearchBudget;
  int threads = 1;
};

// single_device, random, mincut, expert and, when within budget, exhaustive.
std::vector<SchemeResult> CompareSchemes(const ComputationGraph& graph,
                                         const DeviceTopology& topology,
                                         const RewardConfig& reward,
                                         const ComparisonOptions& options);

SchemeResult EvaluateScheme(const std::string& scheme,
                            const ComputationGraph& graph,
                            const DeviceTopology& topology,
                            const RewardConfig& reward,
                            const Placement& placement);

nlohmann::json ComparisonToJson(const ComputationGraph& graph,
                                const std::vector<SchemeResult>& results);
// Columns: graph,scheme,makespan_s,peak_memory_bytes,penalized_runtime_s.
std::string ComparisonToCsv(const ComputationGraph& graph,
                            const std::vector<SchemeResult>& results,
                            bool header = true);

}  // namespace placement

#endif  // PLACEMENT_BASELINES_H_
