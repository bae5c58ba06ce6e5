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
#ifndef PLACEMENT_TRAINER_H_
#define PLACEMENT_TRAINER_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "placement/checkpoint.h"
#include "placement/env.h"
#include "placement/nn.h"
#include "placement/policy.h"

namespace placement {

struct TrainerConfig {
  int epochs = 200;
  // Logical rollout workers per synchronous update.
  int workers = 8;
  // OS threads used to run the workers; results do not depend on it.
  int threads = 1;
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  double entropy_start = 1e-2;
  double entropy_end = 1e-3;
  // Episodes averaged by each per-step baseline.
  int baseline_window = 10;
  InitMode init_mode = InitMode::kAllDevice0;
  // Draw a fresh random topological visit order for every episode.
  bool randomize_order = false;
  std::uint64_t seed = 0;
  nn::AdamConfig adam;

  void Validate() const;
  nlohmann::json ToJson() const;
  // Unknown keys are rejected.
  static TrainerConfig FromJson(const nlohmann::json& doc);

  // Linear schedules over the configured epochs.
  double LearningRate(int epoch) const;
  double EntropyWeight(int epoch) const;
};

enum class ActionSelection { kSample, kGreedy };

struct RolloutOptions {
  InitMode init_mode = InitMode::kAllDevice0;
  bool randomize_order = false;
  ActionSelection selection = ActionSelection::kSample;
  // When non-empty, these actions are taken instead of sampling.
  std::span<const int> forced_actions;
};

struct EpisodeTrace {
  int graph_index = 0;
  std::vector<StepTrace> steps;
  std::vector<double> rewards;
  Placement final_placement;
  double final_runtime = 0.0;  // penalized runtime of the final placement
  double mean_entropy = 0.0;
};

// One episode: reset, then |V| policy-driven steps. `rng` supplies the initial
// placement, the visit order and the action samples, in that order.
EpisodeTrace Rollout(const PlacementEnv& env, const PolicyParameters& params,
                     const PolicyConfig& cfg, const RolloutOptions& options,
                     Rng& rng);

// Suffix sums: out[t] = sum_{i >= t} rewards[i].
std::vector<double> CumulativeRewards(std::span<const double> rewards);

// Per (graph, step) moving average of the last `window` cumulative rewards.
class BaselineTable {
 public:
  explicit BaselineTable(int window);

  // Mean of the stored values; 0 when empty.
  double Value(int graph, int step) const;

  // A_t = G_t - b_t with the baseline as it stood before this episode, then
  // records the episode. Throws Error(kShapeMismatch) if the graph was seen
  // before with a different episode length.
  std::vector<double> Advantages(int graph, std::span<const double> rewards);

  int window() const { return window_; }

 private:
  int window_;
  std::map<int, std::vector<std::deque<double>>> history_;
};

struct CurveRow {
  int epoch = 0;
  std::string graph;
  double mean_runtime = 0.0;
  double best_runtime = 0.0;
  double mean_entropy = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  double entropy_weight = 0.0;
};

std::string CurveToCsv(const std::vector<CurveRow>& rows);

struct EpochStats {
  int epoch = 0;
  std::vector<int> worker_graphs;
  std::vector<double> worker_runtimes;
  std::vector<double> worker_returns;  // undiscounted episodic return
  double mean_runtime = 0.0;
  double mean_entropy = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  double entropy_weight = 0.0;
};

struct BestPlacement {
  Placement placement;
  double runtime = std::numeric_limits<double>::infinity();
};

// Synchronous REINFORCE over a set of training graphs. Every epoch each
// worker rolls out one episode on its own graph against the same parameter
// snapshot; gradients are summed in worker order and applied with one Adam
// step.
class Trainer {
 public:
  Trainer(std::vector<std::shared_ptr<const PlacementEnv>> envs,
          PolicyConfig policy, TrainerConfig config);
  // Resumes from a checkpoint's parameters and optimizer state.
  Trainer(std::vector<std::shared_ptr<const PlacementEnv>> envs,
          const Checkpoint& checkpoint, TrainerConfig config);

  EpochStats TrainEpoch();
  // Runs the remaining epochs; `on_epoch` is called after each one.
  void Train(const std::function<void(const EpochStats&)>& on_epoch = {});

  int epoch() const { return epoch_; }
  const PolicyParameters& params() const { return params_; }
  const PolicyConfig& policy_config() const { return policy_; }
  const TrainerConfig& config() const { return config_; }
  const std::vector<CurveRow>& curve() const { return curve_; }
  const std::vector<BestPlacement>& best() const { return best_; }
  const std::vector<EpochStats>& history() const { return history_; }

  Checkpoint MakeCheckpoint() const;

 private:
  std::vector<std::shared_ptr<const PlacementEnv>> envs_;
  PolicyConfig policy_;
  TrainerConfig config_;
  PolicyParameters params_;
  nn::AdamState adam_;
  BaselineTable baseline_;
  int epoch_ = 0;
  std::vector<CurveRow> curve_;
  std::vector<BestPlacement> best_;
  std::vector<EpochStats> history_;
};

struct Prediction {
  Placement placement;
  double runtime = 0.0;
};

// Greedy rollout (argmax, ties to the lower device id) plus `samples` sampled
// rollouts; returns the best by penalized runtime, the greedy one on ties.
Prediction PredictPlacement(const PolicyParameters& params,
                            const PolicyConfig& cfg, const PlacementEnv& env,
                            int samples = 0, std::uint64_t seed = 0);

// Runs fn(0..count-1) on up to `threads` threads.
void ParallelFor(int count, int threads, const std::function<void(int)>& fn);

}  // namespace placement

#endif  // PLACEMENT_TRAINER_H_
