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
#ifndef PLACEMENT_POLICY_H_
#define PLACEMENT_POLICY_H_

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "placement/env.h"
#include "placement/graph.h"
#include "placement/nn.h"

namespace placement {

enum class PolicyMode {
  // Two-way message passing, then pooling over parents/children/parallel.
  kFull,
  // One dense net over the sum of all raw node features.
  kSimpleAggregator,
  // Parents/children/parallel pooling of raw features, no message passing.
  kSimplePartitioner,
};

std::string PolicyModeName(PolicyMode mode);
PolicyMode PolicyModeFromName(const std::string& name);

struct PolicyConfig {
  int num_devices = 2;
  int message_rounds = 8;
  // Width of the head's hidden layer; 0 means the head's input width.
  int head_hidden = 0;
  PolicyMode mode = PolicyMode::kFull;

  // Raw per-node features: compute, bytes, one-hot device, visited, current.
  int feature_dim() const { return num_devices + 4; }
  // Width of the vectors that get pooled.
  int embedding_dim() const;
  int head_input_dim() const;
  int head_hidden_dim() const;

  void Validate() const;
  nlohmann::json ToJson() const;
  static PolicyConfig FromJson(const nlohmann::json& doc);
  bool operator==(const PolicyConfig&) const = default;
};

enum PoolSet { kParents = 0, kChildren = 1, kParallel = 2 };

// Trainable weights. Nets unused by the configured mode are left empty.
struct PolicyParameters {
  // Top-down (from parents) and bottom-up (from children) message passing:
  // message nets transform neighbour embeddings, update nets combine a
  // node's embedding with the summed messages.
  nn::DenseNet message_down, update_down;
  nn::DenseNet message_up, update_up;
  // Per-set pooling: outer(sum over set of inner(x_u)).
  std::array<nn::DenseNet, 3> pool_inner, pool_outer;
  nn::DenseNet aggregator;
  nn::DenseNet head;

  static PolicyParameters Init(const PolicyConfig& cfg, Rng& rng);
  PolicyParameters ZerosLike() const;

  std::size_t ParameterCount() const;
  Eigen::VectorXd Flatten() const;
  void Unflatten(const Eigen::VectorXd& flat);

  nlohmann::json ToJson() const;
  static PolicyParameters FromJson(const nlohmann::json& doc);

  // Visits (name, net) for every net, used or not, in a fixed order.
  template <typename Fn>
  void ForEachNet(Fn&& fn) {
    fn("message_down", message_down);
    fn("update_down", update_down);
    fn("message_up", message_up);
    fn("update_up", update_up);
    fn("pool_inner_parents", pool_inner[0]);
    fn("pool_inner_children", pool_inner[1]);
    fn("pool_inner_parallel", pool_inner[2]);
    fn("pool_outer_parents", pool_outer[0]);
    fn("pool_outer_children", pool_outer[1]);
    fn("pool_outer_parallel", pool_outer[2]);
    fn("aggregator", aggregator);
    fn("head", head);
  }
  template <typename Fn>
  void ForEachNet(Fn&& fn) const {
    const_cast<PolicyParameters*>(this)->ForEachNet(
        [&](const char* name, nn::DenseNet& net) {
          fn(name, static_cast<const nn::DenseNet&>(net));
        });
  }
};

struct MessageRoundTape {
  nn::DenseTape message_down, update_down;
  nn::DenseTape message_up, update_up;
};

struct EmbedTape {
  std::vector<MessageRoundTape> rounds;
};

struct PolicyTape {
  std::shared_ptr<const ComputationGraph> graph;
  NodeId current = -1;
  Eigen::MatrixXd features;  // F x n
  EmbedTape embed;
  Eigen::MatrixXd embeddings;  // pooled vectors, one column per node
  RelationSets sets;
  std::array<nn::DenseTape, 3> pool_inner, pool_outer;
  nn::DenseTape aggregator;
  nn::DenseTape head;
};

// Message passing over `graph`: two streams start at the raw features and,
// for k synchronous rounds, x_v <- update([x_v; sum_{u in N(v)} message(x_u)])
// with N = direct parents (down) or direct children (up). Returns the
// stacked [down; up] embeddings (2F x n).
Eigen::MatrixXd Embed(const Eigen::MatrixXd& features,
                      const ComputationGraph& graph,
                      const PolicyParameters& params, const PolicyConfig& cfg,
                      EmbedTape* tape = nullptr);

// Head logits for node v from its embedding and the three pooled contexts.
// Empty sets pool to outer(0).
Eigen::VectorXd PoolAndDecide(const Eigen::MatrixXd& embeddings,
                              const RelationSets& sets, NodeId v,
                              const PolicyParameters& params,
                              const PolicyConfig& cfg,
                              PolicyTape* tape = nullptr);

struct PolicyOutput {
  Eigen::VectorXd logits;
  nn::Categorical dist;
  PolicyTape tape;
};

// Distribution over devices for the state's current node.
PolicyOutput PolicyForward(const PlacementEnv& env, const EpisodeState& state,
                           const PolicyParameters& params,
                           const PolicyConfig& cfg);

// Backpropagates d(loss)/d(logits) of one step into `grads`.
void BackwardStep(const PolicyTape& tape, const Eigen::VectorXd& grad_logits,
                  const PolicyParameters& params, const PolicyConfig& cfg,
                  PolicyParameters& grads);

struct StepTrace {
  PolicyTape tape;
  nn::Categorical dist;
  int action = 0;
};

// Gradient of sum_t [ -log pi(a_t|s_t) * A_t - entropy_weight * H_t ],
// accumulated into `grads`.
void PolicyBackward(std::span<const StepTrace> steps,
                    std::span<const double> advantages, double entropy_weight,
                    const PolicyParameters& params, const PolicyConfig& cfg,
                    PolicyParameters& grads);

// The loss PolicyBackward differentiates, recomputed from scratch by
// replaying `actions` from `initial`. Used for gradient checks.
double EpisodeLoss(const PlacementEnv& env, const EpisodeState& initial,
                   std::span<const int> actions,
                   std::span<const double> advantages, double entropy_weight,
                   const PolicyParameters& params, const PolicyConfig& cfg);

}  // namespace placement

#endif  // PLACEMENT_POLICY_H_
