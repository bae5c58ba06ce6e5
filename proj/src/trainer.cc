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
#include "placement/trainer.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "placement/error.h"

namespace placement {

namespace {

double Linear(double start, double end, int epoch, int epochs) {
  if (epochs <= 1) return start;
  const double t = std::clamp(static_cast<double>(epoch) / (epochs - 1), 0.0, 1.0);
  return start + (end - start) * t;
}

constexpr std::uint64_t kAssignStream = 0x61737369676eull;

}  // namespace

void TrainerConfig::Validate() const {
  auto bad = [](const std::string& m) {
    throw Error(ErrorCode::kInvalidArgument, m);
  };
  if (epochs < 0) bad("epochs must be >= 0");
  if (workers < 1) bad("workers must be >= 1");
  if (threads < 1) bad("threads must be >= 1");
  if (!(lr_end >= 0) || !(lr_start >= lr_end)) {
    bad("learning rates must satisfy lr_start >= lr_end >= 0");
  }
  if (!(entropy_end >= 0) || !(entropy_start >= entropy_end)) {
    bad("entropy weights must satisfy entropy_start >= entropy_end >= 0");
  }
  if (baseline_window < 1) bad("baseline_window must be >= 1");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1) ||
      !(adam.beta2 >= 0 && adam.beta2 < 1) || !(adam.epsilon > 0)) {
    bad("invalid Adam hyperparameters");
  }
}

nlohmann::json TrainerConfig::ToJson() const {
  return {
      {"epochs", epochs},
      {"workers", workers},
      {"threads", threads},
      {"lr_start", lr_start},
      {"lr_end", lr_end},
      {"entropy_start", entropy_start},
      {"entropy_end", entropy_end},
      {"baseline_window", baseline_window},
      {"init_mode", init_mode == InitMode::kRandom ? "random" : "all_device_0"},
      {"randomize_order", randomize_order},
      {"seed", seed},
      {"adam_beta1", adam.beta1},
      {"adam_beta2", adam.beta2},
      {"adam_epsilon", adam.epsilon},
  };
}

TrainerConfig TrainerConfig::FromJson(const nlohmann::json& doc) {
  static const std::set<std::string> kKeys = {
      "epochs",      "workers",       "threads",         "lr_start",
      "lr_end",      "entropy_start", "entropy_end",     "baseline_window",
      "init_mode",   "randomize_order", "seed",          "adam_beta1",
      "adam_beta2",  "adam_epsilon"};
  if (!doc.is_object()) {
    throw Error(ErrorCode::kParse, "trainer config must be an object");
  }
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) {
      throw Error(ErrorCode::kParse, "unknown trainer config key '" + key + "'");
    }
  }
  TrainerConfig c;
  try {
    c.epochs = doc.value("epochs", c.epochs);
    c.workers = doc.value("workers", c.workers);
    c.threads = doc.value("threads", c.threads);
    c.lr_start = doc.value("lr_start", c.lr_start);
    c.lr_end = doc.value("lr_end", c.lr_end);
    c.entropy_start = doc.value("entropy_start", c.entropy_start);
    c.entropy_end = doc.value("entropy_end", c.entropy_end);
    c.baseline_window = doc.value("baseline_window", c.baseline_window);
    if (doc.contains("init_mode")) {
      const std::string m = doc.at("init_mode").get<std::string>();
      if (m == "random") {
        c.init_mode = InitMode::kRandom;
      } else if (m == "all_device_0") {
        c.init_mode = InitMode::kAllDevice0;
      } else {
        throw Error(ErrorCode::kParse, "unknown init_mode '" + m + "'");
      }
    }
    c.randomize_order = doc.value("randomize_order", c.randomize_order);
    c.seed = doc.value("seed", c.seed);
    c.adam.beta1 = doc.value("adam_beta1", c.adam.beta1);
    c.adam.beta2 = doc.value("adam_beta2", c.adam.beta2);
    c.adam.epsilon = doc.value("adam_epsilon", c.adam.epsilon);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  c.Validate();
  return c;
}

double TrainerConfig::LearningRate(int epoch) const {
  return Linear(lr_start, lr_end, epoch, epochs);
}

double TrainerConfig::EntropyWeight(int epoch) const {
  return Linear(entropy_start, entropy_end, epoch, epochs);
}

EpisodeTrace Rollout(const PlacementEnv& env, const PolicyParameters& params,
                     const PolicyConfig& cfg, const RolloutOptions& options,
                     Rng& rng) {
  const std::uint64_t init_seed = rng();
  std::optional<std::uint64_t> order_seed;
  const std::uint64_t order_draw = rng();
  if (options.randomize_order) order_seed = order_draw;
  EpisodeState state = env.Reset(options.init_mode, init_seed, order_seed);

  const int n = env.num_nodes();
  if (!options.forced_actions.empty() &&
      static_cast<int>(options.forced_actions.size()) != n) {
    throw Error(ErrorCode::kInvalidArgument,
                "forced actions must cover every node");
  }
  EpisodeTrace trace;
  trace.steps.reserve(n);
  trace.rewards.reserve(n);
  double entropy_sum = 0.0;
  while (!state.done()) {
    PolicyOutput out = PolicyForward(env, state, params, cfg);
    int action;
    if (!options.forced_actions.empty()) {
      action = options.forced_actions[state.step];
    } else if (options.selection == ActionSelection::kGreedy) {
      action = nn::ArgMax(out.dist.probs);
    } else {
      action = nn::SampleIndex(out.dist.probs, rng);
    }
    entropy_sum += out.dist.entropy;
    const StepResult r = env.Step(state, action);
    trace.rewards.push_back(r.reward);
    trace.steps.push_back({std::move(out.tape), std::move(out.dist), action});
  }
  trace.final_placement = state.placement;
  trace.final_runtime = env.Evaluate(state.placement);
  trace.mean_entropy = n > 0 ? entropy_sum / n : 0.0;
  return trace;
}

std::vector<double> CumulativeRewards(std::span<const double> rewards) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc += rewards[i];
    out[i] = acc;
  }
  return out;
}

BaselineTable::BaselineTable(int window) : window_(window) {
  if (window < 1) {
    throw Error(ErrorCode::kInvalidArgument, "baseline window must be >= 1");
  }
}

double BaselineTable::Value(int graph, int step) const {
  auto it = history_.find(graph);
  if (it == history_.end() || step < 0 ||
      step >= static_cast<int>(it->second.size())) {
    return 0.0;
  }
  const auto& q = it->second[step];
  if (q.empty()) return 0.0;
  return std::accumulate(q.begin(), q.end(), 0.0) / q.size();
}

std::vector<double> BaselineTable::Advantages(int graph,
                                              std::span<const double> rewards) {
  const std::vector<double> returns = CumulativeRewards(rewards);
  auto [it, inserted] = history_.try_emplace(graph);
  auto& steps = it->second;
  if (inserted) {
    steps.resize(returns.size());
  } else if (steps.size() != returns.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "episode length changed for graph " + std::to_string(graph));
  }
  std::vector<double> adv(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) {
    adv[t] = returns[t] - Value(graph, static_cast<int>(t));
  }
  for (std::size_t t = 0; t < returns.size(); ++t) {
    steps[t].push_back(returns[t]);
    if (static_cast<int>(steps[t].size()) > window_) steps[t].pop_front();
  }
  return adv;
}

std::string CurveToCsv(const std::vector<CurveRow>& rows) {
  std::ostringstream os;
  os << "epoch,graph,mean_runtime_s,best_runtime_s,mean_entropy,grad_norm,lr,"
        "entropy_w\n";
  os << std::setprecision(10);
  for (const CurveRow& r : rows) {
    os << r.epoch << ',' << r.graph << ',' << r.mean_runtime << ','
       << r.best_runtime << ',' << r.mean_entropy << ',' << r.grad_norm << ','
       << r.lr << ',' << r.entropy_weight << '\n';
  }
  return os.str();
}

void ParallelFor(int count, int threads, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](int i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int t = std::clamp(threads, 1, std::max(count, 1));
  if (t == 1) {
    for (int i = 0; i < count; ++i) guarded(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (int k = 0; k < t; ++k) {
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) guarded(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Trainer::Trainer(std::vector<std::shared_ptr<const PlacementEnv>> envs,
                 PolicyConfig policy, TrainerConfig config)
    : envs_(std::move(envs)),
      policy_(policy),
      config_(config),
      baseline_(config.baseline_window) {
  config_.Validate();
  policy_.Validate();
  if (envs_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no training graphs");
  }
  for (const auto& env : envs_) {
    if (env->num_devices() != policy_.num_devices) {
      throw Error(ErrorCode::kDeviceMismatch,
                  "topology device count differs from the policy's");
    }
  }
  Rng rng(DeriveSeed(config_.seed, 0x696e6974ull));
  params_ = PolicyParameters::Init(policy_, rng);
  nn::AdamConfig adam = config_.adam;
  adam.learning_rate = 1.0;  // scaled by the schedule each step
  adam_ = nn::AdamState(adam, static_cast<Eigen::Index>(params_.ParameterCount()));
  best_.resize(envs_.size());
}

Trainer::Trainer(std::vector<std::shared_ptr<const PlacementEnv>> envs,
                 const Checkpoint& checkpoint, TrainerConfig config)
    : Trainer(std::move(envs), checkpoint.policy, config) {
  params_ = checkpoint.params;
  if (checkpoint.optimizer) adam_ = *checkpoint.optimizer;
  epoch_ = static_cast<int>(checkpoint.epochs_completed);
}

EpochStats Trainer::TrainEpoch() {
  const int W = config_.workers;
  const int e = epoch_;
  EpochStats stats;
  stats.epoch = e;
  stats.lr = config_.LearningRate(e);
  stats.entropy_weight = config_.EntropyWeight(e);

  // Worker w trains on graph perm[w mod N] for a per-epoch shuffle.
  std::vector<int> perm(envs_.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng assign(DeriveSeed(config_.seed, kAssignStream, e));
  for (int i = static_cast<int>(perm.size()) - 1; i > 0; --i) {
    std::swap(perm[i], perm[UniformIndex(assign, i + 1)]);
  }
  stats.worker_graphs.resize(W);
  for (int w = 0; w < W; ++w) stats.worker_graphs[w] = perm[w % perm.size()];

  RolloutOptions options;
  options.init_mode = config_.init_mode;
  options.randomize_order = config_.randomize_order;

  std::vector<EpisodeTrace> traces(W);
  ParallelFor(W, config_.threads, [&](int w) {
    Rng rng(DeriveSeed(config_.seed, e + 1, w + 1));
    traces[w] = Rollout(*envs_[stats.worker_graphs[w]], params_, policy_,
                        options, rng);
    traces[w].graph_index = stats.worker_graphs[w];
  });

  std::vector<std::vector<double>> advantages(W);
  for (int w = 0; w < W; ++w) {
    advantages[w] = baseline_.Advantages(traces[w].graph_index, traces[w].rewards);
  }

  std::vector<PolicyParameters> grads(W);
  ParallelFor(W, config_.threads, [&](int w) {
    grads[w] = params_.ZerosLike();
    PolicyBackward(traces[w].steps, advantages[w], stats.entropy_weight,
                   params_, policy_, grads[w]);
  });
  Eigen::VectorXd total = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(params_.ParameterCount()));
  for (int w = 0; w < W; ++w) total += grads[w].Flatten();
  stats.grad_norm = total.norm();

  Eigen::VectorXd flat = params_.Flatten();
  nn::AdamStep(flat, total, adam_, stats.lr);
  params_.Unflatten(flat);

  // Statistics and per-graph curve rows.
  const int N = static_cast<int>(envs_.size());
  std::vector<double> sum(N, 0.0), entropy(N, 0.0);
  std::vector<int> count(N, 0);
  double runtime_total = 0.0, entropy_total = 0.0;
  for (int w = 0; w < W; ++w) {
    const EpisodeTrace& t = traces[w];
    const double ret = std::accumulate(t.rewards.begin(), t.rewards.end(), 0.0);
    stats.worker_runtimes.push_back(t.final_runtime);
    stats.worker_returns.push_back(ret);
    runtime_total += t.final_runtime;
    entropy_total += t.mean_entropy;
    sum[t.graph_index] += t.final_runtime;
    entropy[t.graph_index] += t.mean_entropy;
    ++count[t.graph_index];
    BestPlacement& best = best_[t.graph_index];
    if (t.final_runtime < best.runtime) {
      best.runtime = t.final_runtime;
      best.placement = t.final_placement;
    }
  }
  stats.mean_runtime = runtime_total / W;
  stats.mean_entropy = entropy_total / W;
  for (int g = 0; g < N; ++g) {
    if (count[g] == 0) continue;
    CurveRow row;
    row.epoch = e;
    row.graph = envs_[g]->graph().name();
    row.mean_runtime = sum[g] / count[g];
    row.best_runtime = best_[g].runtime;
    row.mean_entropy = entropy[g] / count[g];
    row.grad_norm = stats.grad_norm;
    row.lr = stats.lr;
    row.entropy_weight = stats.entropy_weight;
    curve_.push_back(std::move(row));
  }
  history_.push_back(stats);
  ++epoch_;
  return stats;
}

void Trainer::Train(const std::function<void(const EpochStats&)>& on_epoch) {
  while (epoch_ < config_.epochs) {
    const EpochStats s = TrainEpoch();
    if (on_epoch) on_epoch(s);
  }
}

Checkpoint Trainer::MakeCheckpoint() const {
  Checkpoint c;
  c.policy = policy_;
  c.params = params_;
  c.optimizer = adam_;
  c.epochs_completed = epoch_;
  return c;
}

Prediction PredictPlacement(const PolicyParameters& params,
                            const PolicyConfig& cfg, const PlacementEnv& env,
                            int samples, std::uint64_t seed) {
  Rng rng(seed);
  RolloutOptions greedy;
  greedy.selection = ActionSelection::kGreedy;
  EpisodeTrace t = Rollout(env, params, cfg, greedy, rng);
  Prediction best{t.final_placement, t.final_runtime};
  RolloutOptions sample;
  for (int s = 0; s < samples; ++s) {
    Rng srng(DeriveSeed(seed, 0x73616d70ull, s));
    EpisodeTrace st = Rollout(env, params, cfg, sample, srng);
    if (st.final_runtime < best.runtime) {
      best = {st.final_placement, st.final_runtime};
    }
  }
  return best;
}

}  // namespace placement
