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
#include "placement/env.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "placement/error.h"
#include "placement/random.h"

namespace placement {

void ValidateRewardConfig(const RewardConfig& cfg) {
  if (!(cfg.memory_threshold_bytes > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "memory threshold must be > 0");
  }
  if (!(cfg.penalty_per_gb >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "penalty scale must be >= 0");
  }
  if (cfg.reward_scale && !(*cfg.reward_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "reward_scale must be > 0");
  }
}

nlohmann::json RewardConfigToJson(const RewardConfig& cfg) {
  nlohmann::json doc = {
      {"mode", cfg.mode == RewardMode::kTerminal ? "terminal" : "intermediate"},
      {"memory_threshold_bytes", cfg.memory_threshold_bytes},
      {"penalty_per_gb", cfg.penalty_per_gb}};
  if (cfg.reward_scale) doc["reward_scale"] = *cfg.reward_scale;
  return doc;
}

RewardConfig RewardConfigFromJson(const nlohmann::json& doc) {
  static const std::set<std::string> kKeys = {
      "mode", "memory_threshold_bytes", "penalty_per_gb", "reward_scale"};
  if (!doc.is_object()) {
    throw Error(ErrorCode::kParse, "reward config must be an object");
  }
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) {
      throw Error(ErrorCode::kParse, "unknown reward config key '" + key + "'");
    }
  }
  RewardConfig cfg;
  try {
    if (doc.contains("mode")) {
      const std::string mode = doc.at("mode").get<std::string>();
      if (mode == "terminal") {
        cfg.mode = RewardMode::kTerminal;
      } else if (mode == "intermediate") {
        cfg.mode = RewardMode::kIntermediate;
      } else {
        throw Error(ErrorCode::kParse, "unknown reward mode '" + mode + "'");
      }
    }
    cfg.memory_threshold_bytes =
        doc.value("memory_threshold_bytes", cfg.memory_threshold_bytes);
    cfg.penalty_per_gb = doc.value("penalty_per_gb", cfg.penalty_per_gb);
    if (doc.contains("reward_scale") && !doc.at("reward_scale").is_null()) {
      cfg.reward_scale = doc.at("reward_scale").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  ValidateRewardConfig(cfg);
  return cfg;
}

double PenalizedRuntime(double makespan_seconds, double peak_memory_bytes,
                        const RewardConfig& cfg) {
  if (peak_memory_bytes <= cfg.memory_threshold_bytes) return makespan_seconds;
  const double excess_gb =
      (peak_memory_bytes - cfg.memory_threshold_bytes) / kBytesPerGB;
  return makespan_seconds + cfg.penalty_per_gb * excess_gb;
}

double PenalizedRuntime(const SimulationResult& result,
                        const RewardConfig& cfg) {
  double peak = 0.0;
  for (double p : result.peak_memory_bytes) peak = std::max(peak, p);
  return PenalizedRuntime(result.makespan_seconds, peak, cfg);
}

namespace {

std::vector<double> Normalized(std::vector<double> values) {
  double max = 0.0;
  for (double v : values) max = std::max(max, v);
  for (double& v : values) v = max > 0.0 ? v / max : 0.0;
  return values;
}

}  // namespace

PlacementEnv::PlacementEnv(std::shared_ptr<const ComputationGraph> graph,
                           std::shared_ptr<const DeviceTopology> topology,
                           RewardConfig reward)
    : graph_(std::move(graph)),
      topology_(std::move(topology)),
      reward_(reward),
      reach_(*graph_) {
  ValidateRewardConfig(reward_);
  ValidatePlacement(*graph_, *topology_,
                    Placement{std::vector<int>(graph_->size(), 0)});
  std::vector<double> compute, bytes;
  for (const auto& node : graph_->nodes()) {
    compute.push_back(node.ComputeOn(0));
    bytes.push_back(node.output_bytes);
  }
  norm_compute_ = Normalized(std::move(compute));
  norm_bytes_ = Normalized(std::move(bytes));
}

PlacementEnv::PlacementEnv(ComputationGraph graph, DeviceTopology topology,
                           RewardConfig reward)
    : PlacementEnv(std::make_shared<const ComputationGraph>(std::move(graph)),
                   std::make_shared<const DeviceTopology>(std::move(topology)),
                   reward) {}

SimulationResult PlacementEnv::Simulate(const Placement& placement) const {
  return placement::Simulate(*graph_, *topology_, placement);
}

double PlacementEnv::Evaluate(const Placement& placement) const {
  return PenalizedRuntime(Simulate(placement), reward_);
}

EpisodeState PlacementEnv::Reset(InitMode init_mode, std::uint64_t init_seed,
                                 std::optional<std::uint64_t> order_seed) const {
  const int n = num_nodes();
  EpisodeState state;
  state.placement.device.assign(n, 0);
  if (init_mode == InitMode::kRandom) {
    Rng rng(init_seed);
    for (int& d : state.placement.device) {
      d = static_cast<int>(UniformIndex(rng, num_devices()));
    }
  }
  state.visited.assign(n, 0);
  state.visit_order = TopologicalOrder(*graph_, order_seed);
  state.step = 0;
  state.current = n > 0 ? state.visit_order[0] : -1;
  state.initial_runtime = Evaluate(state.placement);
  state.current_runtime = state.initial_runtime;
  state.reward_scale = reward_.reward_scale.value_or(
      std::max(state.initial_runtime, 1e-6));
  return state;
}

StepResult PlacementEnv::Step(EpisodeState& state, int device) const {
  if (state.done()) {
    throw Error(ErrorCode::kEpisodeDone, "step called after the episode ended");
  }
  if (device < 0 || device >= num_devices()) {
    throw Error(ErrorCode::kDeviceMismatch,
                "invalid device " + std::to_string(device));
  }
  const NodeId v = state.current;
  const bool changed = state.placement.device[v] != device;
  state.placement.device[v] = device;
  state.visited[v] = 1;
  ++state.step;
  const bool done = state.done();
  state.current = done ? -1 : state.visit_order[state.step];

  StepResult result;
  result.done = done;
  if (reward_.mode == RewardMode::kIntermediate) {
    const double before = state.current_runtime;
    if (changed) state.current_runtime = Evaluate(state.placement);
    result.reward = (before - state.current_runtime) / state.reward_scale;
  } else if (done) {
    state.current_runtime = Evaluate(state.placement);
    result.reward = -state.current_runtime / state.reward_scale;
  }
  return result;
}

Eigen::MatrixXd PlacementEnv::Featurize(const EpisodeState& state) const {
  const int n = num_nodes();
  const int num_dev = num_devices();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(feature_dim(), n);
  for (NodeId v = 0; v < n; ++v) {
    x(0, v) = norm_compute_[v];
    x(1, v) = norm_bytes_[v];
    x(2 + state.placement.device[v], v) = 1.0;
    x(2 + num_dev, v) = state.visited[v] ? 1.0 : 0.0;
    x(3 + num_dev, v) = v == state.current ? 1.0 : 0.0;
  }
  return x;
}

}  // namespace placement
