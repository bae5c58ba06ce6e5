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
#include "placement/policy.h"

#include "placement/error.h"

namespace placement {

using nn::Activation;
using nn::DenseNet;

std::string PolicyModeName(PolicyMode mode) {
  switch (mode) {
    case PolicyMode::kFull: return "full";
    case PolicyMode::kSimpleAggregator: return "simple_aggregator";
    case PolicyMode::kSimplePartitioner: return "simple_partitioner";
  }
  return "full";
}

PolicyMode PolicyModeFromName(const std::string& name) {
  if (name == "full") return PolicyMode::kFull;
  if (name == "simple_aggregator") return PolicyMode::kSimpleAggregator;
  if (name == "simple_partitioner") return PolicyMode::kSimplePartitioner;
  throw Error(ErrorCode::kInvalidArgument, "unknown policy mode '" + name + "'");
}

int PolicyConfig::embedding_dim() const {
  return mode == PolicyMode::kFull ? 2 * feature_dim() : feature_dim();
}

int PolicyConfig::head_input_dim() const {
  switch (mode) {
    case PolicyMode::kFull:
    case PolicyMode::kSimplePartitioner:
      return 4 * embedding_dim();
    case PolicyMode::kSimpleAggregator:
      return feature_dim();
  }
  return 0;
}

int PolicyConfig::head_hidden_dim() const {
  return head_hidden > 0 ? head_hidden : head_input_dim();
}

void PolicyConfig::Validate() const {
  if (num_devices < 1) {
    throw Error(ErrorCode::kInvalidArgument, "policy needs at least one device");
  }
  if (message_rounds < 0) {
    throw Error(ErrorCode::kInvalidArgument, "message_rounds must be >= 0");
  }
  if (head_hidden < 0) {
    throw Error(ErrorCode::kInvalidArgument, "head_hidden must be >= 0");
  }
}

nlohmann::json PolicyConfig::ToJson() const {
  return {{"num_devices", num_devices},
          {"message_rounds", message_rounds},
          {"head_hidden", head_hidden},
          {"mode", PolicyModeName(mode)}};
}

PolicyConfig PolicyConfig::FromJson(const nlohmann::json& doc) {
  PolicyConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "num_devices") {
      cfg.num_devices = value.get<int>();
    } else if (key == "message_rounds") {
      cfg.message_rounds = value.get<int>();
    } else if (key == "head_hidden") {
      cfg.head_hidden = value.get<int>();
    } else if (key == "mode") {
      cfg.mode = PolicyModeFromName(value.get<std::string>());
    } else {
      throw Error(ErrorCode::kParse, "unknown policy key '" + key + "'");
    }
  }
  cfg.Validate();
  return cfg;
}

PolicyParameters PolicyParameters::Init(const PolicyConfig& cfg, Rng& rng) {
  cfg.Validate();
  const int f = cfg.feature_dim();
  const int e = cfg.embedding_dim();
  PolicyParameters p;
  const std::vector<Activation> relu = {Activation::kRelu};
  if (cfg.mode == PolicyMode::kFull) {
    p.message_down = DenseNet::Init({f, f}, relu, rng);
    p.update_down = DenseNet::Init({2 * f, f}, relu, rng);
    p.message_up = DenseNet::Init({f, f}, relu, rng);
    p.update_up = DenseNet::Init({2 * f, f}, relu, rng);
  }
  if (cfg.mode != PolicyMode::kSimpleAggregator) {
    for (int i = 0; i < 3; ++i) {
      p.pool_inner[i] = DenseNet::Init({e, e}, relu, rng);
      p.pool_outer[i] = DenseNet::Init({e, e}, relu, rng);
    }
  } else {
    p.aggregator = DenseNet::Init({f, f}, relu, rng);
  }
  p.head = DenseNet::Init(
      {cfg.head_input_dim(), cfg.head_hidden_dim(), cfg.num_devices},
      {Activation::kRelu, Activation::kIdentity}, rng);
  return p;
}

PolicyParameters PolicyParameters::ZerosLike() const {
  PolicyParameters out = *this;
  out.ForEachNet([](const char*, DenseNet& net) { net = net.ZerosLike(); });
  return out;
}

std::size_t PolicyParameters::ParameterCount() const {
  std::size_t n = 0;
  ForEachNet([&](const char*, const DenseNet& net) { n += net.ParameterCount(); });
  return n;
}

Eigen::VectorXd PolicyParameters::Flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(ParameterCount()));
  Eigen::Index offset = 0;
  ForEachNet([&](const char*, const DenseNet& net) {
    net.VisitBuffers([&](const double* data, std::size_t size) {
      flat.segment(offset, static_cast<Eigen::Index>(size)) =
          Eigen::Map<const Eigen::VectorXd>(data, static_cast<Eigen::Index>(size));
      offset += static_cast<Eigen::Index>(size);
    });
  });
  return flat;
}

void PolicyParameters::Unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(ParameterCount())) {
    throw Error(ErrorCode::kShapeMismatch, "flat parameter size mismatch");
  }
  Eigen::Index offset = 0;
  ForEachNet([&](const char*, DenseNet& net) {
    net.VisitBuffers([&](double* data, std::size_t size) {
      Eigen::Map<Eigen::VectorXd>(data, static_cast<Eigen::Index>(size)) =
          flat.segment(offset, static_cast<Eigen::Index>(size));
      offset += static_cast<Eigen::Index>(size);
    });
  });
}

nlohmann::json PolicyParameters::ToJson() const {
  nlohmann::json doc = nlohmann::json::object();
  ForEachNet([&](const char* name, const DenseNet& net) {
    if (net.num_layers() > 0) doc[name] = net.ToJson();
  });
  return doc;
}

PolicyParameters PolicyParameters::FromJson(const nlohmann::json& doc) {
  PolicyParameters p;
  std::size_t seen = 0;
  p.ForEachNet([&](const char* name, DenseNet& net) {
    if (doc.contains(name)) {
      net = DenseNet::FromJson(doc.at(name));
      ++seen;
    }
  });
  if (seen != doc.size()) {
    throw Error(ErrorCode::kParse, "unknown network in checkpoint parameters");
  }
  return p;
}

namespace {

enum class Direction { kDown, kUp };

// Sum of neighbour messages: down pulls from parents, up from children.
Eigen::MatrixXd AggregateMessages(const Eigen::MatrixXd& messages,
                                  const ComputationGraph& graph,
                                  Direction dir) {
  Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(messages.rows(), messages.cols());
  for (const auto& [u, v] : graph.edges()) {
    if (dir == Direction::kDown) {
      agg.col(v) += messages.col(u);
    } else {
      agg.col(u) += messages.col(v);
    }
  }
  return agg;
}

// Adjoint of AggregateMessages.
Eigen::MatrixXd ScatterMessageGrads(const Eigen::MatrixXd& grad_agg,
                                    const ComputationGraph& graph,
                                    Direction dir) {
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(grad_agg.rows(), grad_agg.cols());
  for (const auto& [u, v] : graph.edges()) {
    if (dir == Direction::kDown) {
      grad.col(u) += grad_agg.col(v);
    } else {
      grad.col(v) += grad_agg.col(u);
    }
  }
  return grad;
}

Eigen::MatrixXd MessageStep(const Eigen::MatrixXd& x,
                            const ComputationGraph& graph,
                            const DenseNet& message, const DenseNet& update,
                            Direction dir, nn::DenseTape* message_tape,
                            nn::DenseTape* update_tape) {
  const Eigen::MatrixXd msgs = message.Forward(x, message_tape);
  Eigen::MatrixXd stacked(2 * x.rows(), x.cols());
  stacked.topRows(x.rows()) = x;
  stacked.bottomRows(x.rows()) = AggregateMessages(msgs, graph, dir);
  return update.Forward(stacked, update_tape);
}

// Returns d/dx of one round given d/d(output).
Eigen::MatrixXd MessageStepBackward(const Eigen::MatrixXd& grad_out,
                                    const ComputationGraph& graph,
                                    const DenseNet& message,
                                    const DenseNet& update, Direction dir,
                                    const nn::DenseTape& message_tape,
                                    const nn::DenseTape& update_tape,
                                    DenseNet& message_grads,
                                    DenseNet& update_grads) {
  const Eigen::MatrixXd grad_stacked =
      update.Backward(update_tape, grad_out, update_grads);
  const Eigen::Index f = grad_out.rows();
  Eigen::MatrixXd grad_x = grad_stacked.topRows(f);
  const Eigen::MatrixXd grad_msgs =
      ScatterMessageGrads(grad_stacked.bottomRows(f), graph, dir);
  grad_x += message.Backward(message_tape, grad_msgs, message_grads);
  return grad_x;
}

Eigen::MatrixXd Columns(const Eigen::MatrixXd& m, const std::vector<NodeId>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = m.col(cols[i]);
  }
  return out;
}

const std::vector<NodeId>& SetOf(const RelationSets& sets, int i) {
  return i == kParents ? sets.parents : i == kChildren ? sets.children
                                                       : sets.parallel;
}

}  // namespace

Eigen::MatrixXd Embed(const Eigen::MatrixXd& features,
                      const ComputationGraph& graph,
                      const PolicyParameters& params, const PolicyConfig& cfg,
                      EmbedTape* tape) {
  Eigen::MatrixXd down = features;
  Eigen::MatrixXd up = features;
  if (tape) tape->rounds.assign(cfg.message_rounds, {});
  for (int r = 0; r < cfg.message_rounds; ++r) {
    MessageRoundTape* rt = tape ? &tape->rounds[r] : nullptr;
    Eigen::MatrixXd next_down =
        MessageStep(down, graph, params.message_down, params.update_down,
                    Direction::kDown, rt ? &rt->message_down : nullptr,
                    rt ? &rt->update_down : nullptr);
    Eigen::MatrixXd next_up =
        MessageStep(up, graph, params.message_up, params.update_up,
                    Direction::kUp, rt ? &rt->message_up : nullptr,
                    rt ? &rt->update_up : nullptr);
    down = std::move(next_down);
    up = std::move(next_up);
  }
  Eigen::MatrixXd out(2 * features.rows(), features.cols());
  out.topRows(features.rows()) = down;
  out.bottomRows(features.rows()) = up;
  return out;
}

Eigen::VectorXd PoolAndDecide(const Eigen::MatrixXd& embeddings,
                              const RelationSets& sets, NodeId v,
                              const PolicyParameters& params,
                              const PolicyConfig& cfg, PolicyTape* tape) {
  const Eigen::Index e = embeddings.rows();
  Eigen::VectorXd head_in(4 * e);
  head_in.head(e) = embeddings.col(v);
  for (int i = 0; i < 3; ++i) {
    const auto& members = SetOf(sets, i);
    Eigen::VectorXd pooled = Eigen::VectorXd::Zero(e);
    if (!members.empty()) {
      pooled = params.pool_inner[i]
                   .Forward(Columns(embeddings, members),
                            tape ? &tape->pool_inner[i] : nullptr)
                   .rowwise()
                   .sum();
    }
    head_in.segment((i + 1) * e, e) =
        params.pool_outer[i].Forward(pooled, tape ? &tape->pool_outer[i] : nullptr);
  }
  (void)cfg;
  return params.head.Forward(head_in, tape ? &tape->head : nullptr);
}

PolicyOutput PolicyForward(const PlacementEnv& env, const EpisodeState& state,
                           const PolicyParameters& params,
                           const PolicyConfig& cfg) {
  if (cfg.num_devices != env.num_devices()) {
    throw Error(ErrorCode::kDeviceMismatch,
                "policy expects " + std::to_string(cfg.num_devices) +
                    " devices, topology has " +
                    std::to_string(env.num_devices()));
  }
  if (state.done()) {
    throw Error(ErrorCode::kEpisodeDone, "no current node to place");
  }
  PolicyOutput out;
  PolicyTape& tape = out.tape;
  tape.graph = env.graph_ptr();
  tape.current = state.current;
  tape.features = env.Featurize(state);

  switch (cfg.mode) {
    case PolicyMode::kFull:
      tape.embeddings = Embed(tape.features, env.graph(), params, cfg, &tape.embed);
      tape.sets = GetRelationSets(env.reachability(), state.current);
      out.logits = PoolAndDecide(tape.embeddings, tape.sets, state.current,
                                 params, cfg, &tape);
      break;
    case PolicyMode::kSimplePartitioner:
      tape.embeddings = tape.features;
      tape.sets = GetRelationSets(env.reachability(), state.current);
      out.logits = PoolAndDecide(tape.embeddings, tape.sets, state.current,
                                 params, cfg, &tape);
      break;
    case PolicyMode::kSimpleAggregator: {
      const Eigen::VectorXd total = tape.features.rowwise().sum();
      const Eigen::VectorXd agg = params.aggregator.Forward(total, &tape.aggregator);
      out.logits = params.head.Forward(agg, &tape.head);
      break;
    }
  }
  out.dist = nn::Softmax(out.logits);
  return out;
}

void BackwardStep(const PolicyTape& tape, const Eigen::VectorXd& grad_logits,
                  const PolicyParameters& params, const PolicyConfig& cfg,
                  PolicyParameters& grads) {
  const Eigen::VectorXd grad_head_in =
      params.head.Backward(tape.head, grad_logits, grads.head);

  if (cfg.mode == PolicyMode::kSimpleAggregator) {
    // The raw feature sum needs no further gradient.
    params.aggregator.Backward(tape.aggregator, grad_head_in, grads.aggregator);
    return;
  }

  const Eigen::Index e = tape.embeddings.rows();
  const Eigen::Index n = tape.embeddings.cols();
  Eigen::MatrixXd grad_emb = Eigen::MatrixXd::Zero(e, n);
  grad_emb.col(tape.current) += grad_head_in.head(e);
  for (int i = 0; i < 3; ++i) {
    const Eigen::VectorXd grad_pooled = params.pool_outer[i].Backward(
        tape.pool_outer[i], grad_head_in.segment((i + 1) * e, e),
        grads.pool_outer[i]);
    const auto& members = SetOf(tape.sets, i);
    if (members.empty()) continue;
    const Eigen::MatrixXd grad_inner_out =
        grad_pooled.replicate(1, static_cast<Eigen::Index>(members.size()));
    const Eigen::MatrixXd grad_members = params.pool_inner[i].Backward(
        tape.pool_inner[i], grad_inner_out, grads.pool_inner[i]);
    for (std::size_t j = 0; j < members.size(); ++j) {
      grad_emb.col(members[j]) += grad_members.col(static_cast<Eigen::Index>(j));
    }
  }

  if (cfg.mode != PolicyMode::kFull) return;

  const ComputationGraph& graph = *tape.graph;
  const Eigen::Index f = e / 2;
  Eigen::MatrixXd grad_down = grad_emb.topRows(f);
  Eigen::MatrixXd grad_up = grad_emb.bottomRows(f);
  for (int r = cfg.message_rounds - 1; r >= 0; --r) {
    const MessageRoundTape& rt = tape.embed.rounds[r];
    grad_down = MessageStepBackward(grad_down, graph, params.message_down,
                                    params.update_down, Direction::kDown,
                                    rt.message_down, rt.update_down,
                                    grads.message_down, grads.update_down);
    grad_up = MessageStepBackward(grad_up, graph, params.message_up,
                                  params.update_up, Direction::kUp,
                                  rt.message_up, rt.update_up,
                                  grads.message_up, grads.update_up);
  }
}

void PolicyBackward(std::span<const StepTrace> steps,
                    std::span<const double> advantages, double entropy_weight,
                    const PolicyParameters& params, const PolicyConfig& cfg,
                    PolicyParameters& grads) {
  if (steps.size() != advantages.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "advantages do not match the episode length");
  }
  for (std::size_t t = 0; t < steps.size(); ++t) {
    if (advantages[t] == 0.0 && entropy_weight == 0.0) continue;
    const Eigen::VectorXd grad_logits = nn::PolicyLossLogitGradient(
        steps[t].dist, steps[t].action, advantages[t], entropy_weight);
    BackwardStep(steps[t].tape, grad_logits, params, cfg, grads);
  }
}

double EpisodeLoss(const PlacementEnv& env, const EpisodeState& initial,
                   std::span<const int> actions,
                   std::span<const double> advantages, double entropy_weight,
                   const PolicyParameters& params, const PolicyConfig& cfg) {
  if (actions.size() != advantages.size()) {
    throw Error(ErrorCode::kShapeMismatch, "actions and advantages differ");
  }
  EpisodeState state = initial;
  double loss = 0.0;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    const PolicyOutput out = PolicyForward(env, state, params, cfg);
    loss += -out.dist.log_probs[actions[t]] * advantages[t] -
            entropy_weight * out.dist.entropy;
    env.Step(state, actions[t]);
  }
  return loss;
}

}  // namespace placement
