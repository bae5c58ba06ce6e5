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
#ifndef PLACEMENT_ENV_H_
#define PLACEMENT_ENV_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "placement/graph.h"
#include "placement/simulator.h"
#include "placement/topology.h"

namespace placement {

inline constexpr double kBytesPerGB = 1024.0 * 1024.0 * 1024.0;

enum class RewardMode { kTerminal, kIntermediate };

struct RewardConfig {
  RewardMode mode = RewardMode::kTerminal;
  // Peak memory above this is penalized. One threshold for every device.
  double memory_threshold_bytes = 10.7 * kBytesPerGB;
  // Seconds of penalty per GB over the threshold.
  double penalty_per_gb = 2.0;
  // Divides every reward. Unset means R(p0) of the episode, floored at 1e-6 s.
  std::optional<double> reward_scale;
};

void ValidateRewardConfig(const RewardConfig& cfg);
nlohmann::json RewardConfigToJson(const RewardConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
RewardConfig RewardConfigFromJson(const nlohmann::json& doc);

// Memory-penalized runtime R(p): the makespan, plus penalty_per_gb for every
// GB the worst device's peak exceeds the threshold. m == M is not penalized.
double PenalizedRuntime(double makespan_seconds, double peak_memory_bytes,
                        const RewardConfig& cfg);
double PenalizedRuntime(const SimulationResult& result, const RewardConfig& cfg);

enum class InitMode { kAllDevice0, kRandom };

struct EpisodeState {
  Placement placement;
  std::vector<char> visited;
  NodeId current = -1;  // -1 once done
  int step = 0;
  std::vector<NodeId> visit_order;
  double initial_runtime = 0.0;  // R(p0)
  double current_runtime = 0.0;  // R(current placement); intermediate mode
  double reward_scale = 1.0;

  bool done() const { return step == static_cast<int>(visit_order.size()); }
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

// The node-by-node placement MDP over one graph and topology. Immutable and
// shareable across threads; episode state lives in EpisodeState.
class PlacementEnv {
 public:
  PlacementEnv(std::shared_ptr<const ComputationGraph> graph,
               std::shared_ptr<const DeviceTopology> topology,
               RewardConfig reward);
  PlacementEnv(ComputationGraph graph, DeviceTopology topology,
               RewardConfig reward);

  const ComputationGraph& graph() const { return *graph_; }
  const std::shared_ptr<const ComputationGraph>& graph_ptr() const {
    return graph_;
  }
  const DeviceTopology& topology() const { return *topology_; }
  const ReachabilityIndex& reachability() const { return reach_; }
  const RewardConfig& reward_config() const { return reward_; }
  int num_nodes() const { return graph_->size(); }
  int num_devices() const { return topology_->size(); }
  // |D| + 4: compute, bytes, one-hot device, visited, current.
  int feature_dim() const { return num_devices() + 4; }

  // `init_seed` only matters for InitMode::kRandom. Without `order_seed`
  // nodes are visited in min-id Kahn order.
  EpisodeState Reset(InitMode init_mode, std::uint64_t init_seed = 0,
                     std::optional<std::uint64_t> order_seed = {}) const;

  // Places the current node on `device` and advances to the next node.
  StepResult Step(EpisodeState& state, int device) const;

  // Feature matrix, one column per node.
  Eigen::MatrixXd Featurize(const EpisodeState& state) const;

  SimulationResult Simulate(const Placement& placement) const;
  double Evaluate(const Placement& placement) const;

 private:
  std::shared_ptr<const ComputationGraph> graph_;
  std::shared_ptr<const DeviceTopology> topology_;
  RewardConfig reward_;
  ReachabilityIndex reach_;
  std::vector<double> norm_compute_;
  std::vector<double> norm_bytes_;
};

}  // namespace placement

#endif  // PLACEMENT_ENV_H_
