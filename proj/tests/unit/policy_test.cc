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
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include <gtest/gtest.h>

#include "placement/checkpoint.h"
#include "placement/error.h"
#include "placement/policy.h"
#include "placement/trainer.h"
#include "testing.h"

namespace placement {
namespace {

using testing::Diamond;
using testing::DiamondTopology;
using testing::MakeGraph;
using testing::RandomDag;

PolicyConfig Config(PolicyMode mode, int rounds = 3) {
  PolicyConfig cfg;
  cfg.num_devices = 2;
  cfg.message_rounds = rounds;
  cfg.mode = mode;
  return cfg;
}

// Init plus small noise on every weight and bias, so no unit sits at a kink.
PolicyParameters NoisyParams(const PolicyConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  PolicyParameters p = PolicyParameters::Init(cfg, rng);
  Eigen::VectorXd flat = p.Flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    flat(i) += UniformReal(rng, -0.1, 0.1);
  }
  p.Unflatten(flat);
  return p;
}

Eigen::MatrixXd RandomFeatures(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = Uniform01(rng);
  return x;
}

TEST(PolicyConfig, Dimensions) {
  PolicyConfig full = Config(PolicyMode::kFull);
  EXPECT_EQ(full.feature_dim(), 6);
  EXPECT_EQ(full.embedding_dim(), 12);
  EXPECT_EQ(full.head_input_dim(), 48);
  EXPECT_EQ(full.head_hidden_dim(), 48);
  EXPECT_EQ(Config(PolicyMode::kSimplePartitioner).head_input_dim(), 24);
  EXPECT_EQ(Config(PolicyMode::kSimpleAggregator).head_input_dim(), 6);
  full.head_hidden = 16;
  EXPECT_EQ(full.head_hidden_dim(), 16);
}

TEST(PolicyConfig, JsonRejectsUnknownKeys) {
  const PolicyConfig cfg = Config(PolicyMode::kSimplePartitioner, 5);
  EXPECT_EQ(PolicyConfig::FromJson(cfg.ToJson()), cfg);
  nlohmann::json doc = cfg.ToJson();
  doc["bogus"] = 1;
  EXPECT_THROW(PolicyConfig::FromJson(doc), Error);
  PolicyConfig bad = cfg;
  bad.message_rounds = -1;
  EXPECT_THROW(bad.Validate(), Error);
}

TEST(Embed, ZeroRoundsIsRawTwice) {
  const PolicyConfig cfg = Config(PolicyMode::kFull, 0);
  Rng rng(1);
  const PolicyParameters p = PolicyParameters::Init(cfg, rng);
  const Eigen::MatrixXd x = RandomFeatures(rng, 6, 4);
  const Eigen::MatrixXd e = Embed(x, Diamond(), p, cfg);
  EXPECT_EQ(Eigen::MatrixXd(e.topRows(6)), x);
  EXPECT_EQ(Eigen::MatrixXd(e.bottomRows(6)), x);
}

TEST(Embed, IsolatedNodeIteratesUpdate) {
  const PolicyConfig cfg = Config(PolicyMode::kFull, 4);
  const PolicyParameters p = NoisyParams(cfg, 2);
  Rng rng(2);
  const Eigen::MatrixXd x = RandomFeatures(rng, 6, 1);
  const ComputationGraph g = MakeGraph("one", {1.0}, {0.0}, {});
  const Eigen::MatrixXd e = Embed(x, g, p, cfg);
  Eigen::VectorXd down = x.col(0), up = x.col(0);
  for (int r = 0; r < 4; ++r) {
    Eigen::VectorXd in(12);
    in << down, Eigen::VectorXd::Zero(6);
    down = p.update_down.Forward(in);
    in << up, Eigen::VectorXd::Zero(6);
    up = p.update_up.Forward(in);
  }
  EXPECT_LE((e.col(0).head(6) - down).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((e.col(0).tail(6) - up).cwiseAbs().maxCoeff(), 1e-15);
}

ComputationGraph Permute(const ComputationGraph& g,
                         const std::vector<NodeId>& perm) {
  std::vector<OpGroup> nodes(g.size());
  for (NodeId v = 0; v < g.size(); ++v) {
    nodes[perm[v]] = g.node(v);
    nodes[perm[v]].id = perm[v];
  }
  std::vector<Edge> edges;
  for (const auto& [u, v] : g.edges()) edges.emplace_back(perm[u], perm[v]);
  return ComputationGraph(g.name(), std::move(nodes), std::move(edges));
}

TEST(Embed, PermutationEquivariant) {
  const PolicyConfig cfg = Config(PolicyMode::kFull, 5);
  const PolicyParameters p = NoisyParams(cfg, 3);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ComputationGraph g = RandomDag(rng, 12, 0.25, 0, 1, 0, 1);
    std::vector<NodeId> perm(g.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Eigen::MatrixXd x = RandomFeatures(rng, 6, g.size());
    Eigen::MatrixXd px(6, g.size());
    for (NodeId v = 0; v < g.size(); ++v) px.col(perm[v]) = x.col(v);
    const Eigen::MatrixXd e = Embed(x, g, p, cfg);
    const Eigen::MatrixXd pe = Embed(px, Permute(g, perm), p, cfg);
    for (NodeId v = 0; v < g.size(); ++v) {
      ASSERT_LE((e.col(v) - pe.col(perm[v])).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(PoolAndDecide, SetOrderDoesNotMatter) {
  const PolicyConfig cfg = Config(PolicyMode::kFull, 2);
  const PolicyParameters p = NoisyParams(cfg, 4);
  Rng rng(4);
  const ComputationGraph g = RandomDag(rng, 15, 0.2, 0, 1, 0, 1);
  const Eigen::MatrixXd e = RandomFeatures(rng, 12, g.size());
  const ReachabilityIndex idx(g);
  for (NodeId v = 0; v < g.size(); ++v) {
    const RelationSets s = GetRelationSets(idx, v);
    RelationSets shuffled = s;
    std::shuffle(shuffled.parents.begin(), shuffled.parents.end(), rng);
    std::shuffle(shuffled.children.begin(), shuffled.children.end(), rng);
    std::shuffle(shuffled.parallel.begin(), shuffled.parallel.end(), rng);
    const Eigen::VectorXd a = PoolAndDecide(e, s, v, p, cfg);
    const Eigen::VectorXd b = PoolAndDecide(e, shuffled, v, p, cfg);
    ASSERT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PoolAndDecide, SingleNodeUsesEmptyPools) {
  const PolicyConfig cfg = Config(PolicyMode::kFull, 2);
  const PolicyParameters p = NoisyParams(cfg, 5);
  Eigen::MatrixXd e = Eigen::MatrixXd::Constant(12, 1, 0.3);
  const Eigen::VectorXd logits = PoolAndDecide(e, RelationSets{}, 0, p, cfg);
  Eigen::VectorXd in(48);
  in.head(12) = e.col(0);
  for (int i = 0; i < 3; ++i) {
    in.segment(12 * (i + 1), 12) =
        p.pool_outer[i].Forward(Eigen::VectorXd(Eigen::VectorXd::Zero(12)));
  }
  EXPECT_LE((logits - p.head.Forward(in)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PoolAndDecide, SetsAreDistinguished) {
  // Diamond, v = b: swap the embeddings of c (parallel) and d (child).
  const PolicyConfig cfg = Config(PolicyMode::kFull, 2);
  const PolicyParameters p = NoisyParams(cfg, 0);
  Rng rng(6);
  Eigen::MatrixXd e = RandomFeatures(rng, 12, 4);
  const RelationSets s = GetRelationSets(ReachabilityIndex(Diamond()), 1);
  const Eigen::VectorXd a = PoolAndDecide(e, s, 1, p, cfg);
  e.col(2).swap(e.col(3));
  const Eigen::VectorXd b = PoolAndDecide(e, s, 1, p, cfg);
  EXPECT_GT((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(PolicyForward, NearUniformAtInit) {
  const PlacementEnv env(Diamond(), DiamondTopology(), {});
  const PolicyConfig cfg = Config(PolicyMode::kFull, 8);
  int within = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const PolicyParameters p = PolicyParameters::Init(cfg, rng);
    const PolicyOutput out =
        PolicyForward(env, env.Reset(InitMode::kAllDevice0), p, cfg);
    if (std::abs(out.dist.probs(0) - 0.5) <= 0.2) ++within;
  }
  EXPECT_GE(within, 45);
}

TEST(PolicyForward, ProbabilitiesSumToOne) {
  Rng rng(21);
  for (PolicyMode mode : {PolicyMode::kFull, PolicyMode::kSimpleAggregator,
                          PolicyMode::kSimplePartitioner}) {
    const PolicyConfig cfg = Config(mode, 4);
    for (int trial = 0; trial < 10; ++trial) {
      const ComputationGraph g = RandomDag(rng, 10, 0.3, 0.1, 5.0, 0, 1e8);
      const PlacementEnv env(g, DiamondTopology(), {});
      const PolicyParameters p = NoisyParams(cfg, trial);
      EpisodeState s = env.Reset(InitMode::kRandom, trial);
      while (!s.done()) {
        const PolicyOutput out = PolicyForward(env, s, p, cfg);
        ASSERT_TRUE(out.logits.allFinite());
        ASSERT_NEAR(out.dist.probs.sum(), 1.0, 1e-12);
        env.Step(s, nn::ArgMax(out.dist.probs));
      }
    }
  }
}

TEST(PolicyForward, AggregatorIgnoresWhichNodeIsCurrent) {
  const PlacementEnv env(Diamond(), DiamondTopology(), {});
  const PolicyConfig cfg = Config(PolicyMode::kSimpleAggregator);
  const PolicyParameters p = NoisyParams(cfg, 7);
  EpisodeState s = env.Reset(InitMode::kAllDevice0);
  const Eigen::VectorXd a = PolicyForward(env, s, p, cfg).logits;
  s.current = 3;
  const Eigen::VectorXd b = PolicyForward(env, s, p, cfg).logits;
  EXPECT_EQ(a, b);
}

TEST(PolicyForward, Errors) {
  const PlacementEnv env(Diamond(), DeviceTopology::Uniform(3, 1e9, 1e6), {});
  const PolicyConfig cfg = Config(PolicyMode::kFull);
  Rng rng(0);
  const PolicyParameters p = PolicyParameters::Init(cfg, rng);
  EXPECT_THROW(PolicyForward(env, env.Reset(InitMode::kAllDevice0), p, cfg),
               Error);
}

TEST(PolicyBackward, ZeroAdvantageZeroGradient) {
  const auto env = std::make_shared<PlacementEnv>(Diamond(), DiamondTopology(),
                                                  RewardConfig{});
  const PolicyConfig cfg = Config(PolicyMode::kFull);
  const PolicyParameters p = NoisyParams(cfg, 8);
  Rng rng(8);
  const EpisodeTrace t = Rollout(*env, p, cfg, {}, rng);
  const std::vector<double> adv(t.steps.size(), 0.0);
  PolicyParameters g = p.ZerosLike();
  PolicyBackward(t.steps, adv, 0.0, p, cfg, g);
  EXPECT_EQ(g.Flatten().norm(), 0.0);
}

TEST(PolicyBackward, PositiveAdvantageRaisesActionLogit) {
  const PlacementEnv env(MakeGraph("one", {1.0}, {1.0}, {}), DiamondTopology(),
                         {});
  const PolicyConfig cfg = Config(PolicyMode::kFull);
  Rng rng(9);
  const PolicyParameters p = PolicyParameters::Init(cfg, rng);
  for (int action = 0; action < 2; ++action) {
    const std::vector<int> forced{action};
    RolloutOptions opt;
    opt.forced_actions = forced;
    const EpisodeTrace t = Rollout(env, p, cfg, opt, rng);
    PolicyParameters g = p.ZerosLike();
    PolicyBackward(t.steps, std::vector<double>{1.0}, 0.0, p, cfg, g);
    const Eigen::VectorXd& bias = g.head.layer(1).bias;
    // Descending the loss moves the chosen logit up and the other down.
    EXPECT_LT(bias(action), 0.0);
    EXPECT_GT(bias(1 - action), 0.0);
    EXPECT_NEAR(bias(action), -(1.0 - t.steps[0].dist.probs(action)), 1e-12);
  }
}

class GradientCheckTest : public ::testing::TestWithParam<PolicyMode> {};

TEST_P(GradientCheckTest, EpisodeLossMatchesFiniteDifferences) {
  const ComputationGraph g = MakeGraph("four", {1.0, 2.0, 1.5, 0.5},
                                       {2e6, 1e6, 3e6, 1e6},
                                       {{0, 1}, {0, 2}, {1, 3}});
  RewardConfig reward;
  reward.mode = RewardMode::kIntermediate;
  const PlacementEnv env(g, DiamondTopology(), reward);
  const PolicyConfig cfg = Config(GetParam(), 3);
  const PolicyParameters p = NoisyParams(cfg, 10);
  Rng rng(10);
  const EpisodeTrace t = Rollout(env, p, cfg, {}, rng);
  std::vector<int> actions;
  for (const StepTrace& s : t.steps) actions.push_back(s.action);
  const std::vector<double> adv = {0.7, -1.2, 0.4, 2.0};
  const double beta = 0.05;
  PolicyParameters grads = p.ZerosLike();
  PolicyBackward(t.steps, adv, beta, p, cfg, grads);
  const EpisodeState initial = env.Reset(InitMode::kAllDevice0);
  auto loss = [&](const Eigen::VectorXd& flat) {
    PolicyParameters q = p;
    q.Unflatten(flat);
    return EpisodeLoss(env, initial, actions, adv, beta, q, cfg);
  };
  const nn::GradientCheck check =
      nn::FiniteDifferenceCheck(loss, p.Flatten(), grads.Flatten(), 1e-5);
  EXPECT_LE(check.max_relative_error, 1e-4);
  EXPECT_GT(check.checked, static_cast<int>(p.ParameterCount() / 2));
}

INSTANTIATE_TEST_SUITE_P(Modes, GradientCheckTest,
                         ::testing::Values(PolicyMode::kFull,
                                           PolicyMode::kSimpleAggregator,
                                           PolicyMode::kSimplePartitioner),
                         [](const auto& info) {
                           return PolicyModeName(info.param);
                         });

TEST(PolicyParameters, FlattenAndJsonRoundTrip) {
  for (PolicyMode mode : {PolicyMode::kFull, PolicyMode::kSimpleAggregator,
                          PolicyMode::kSimplePartitioner}) {
    const PolicyConfig cfg = Config(mode);
    const PolicyParameters p = NoisyParams(cfg, 11);
    const Eigen::VectorXd flat = p.Flatten();
    EXPECT_EQ(static_cast<std::size_t>(flat.size()), p.ParameterCount());
    PolicyParameters q = p.ZerosLike();
    q.Unflatten(flat);
    EXPECT_EQ(q.Flatten(), flat);
    EXPECT_EQ(PolicyParameters::FromJson(p.ToJson()).Flatten(), flat);
    EXPECT_THROW(q.Unflatten(Eigen::VectorXd::Zero(3)), Error);
  }
}

TEST(Checkpoint, RoundTripAndShapeCheck) {
  const PolicyConfig cfg = Config(PolicyMode::kFull);
  Checkpoint c;
  c.policy = cfg;
  c.params = NoisyParams(cfg, 12);
  c.optimizer = nn::AdamState(nn::AdamConfig{},
                              static_cast<Eigen::Index>(c.params.ParameterCount()));
  c.epochs_completed = 3;
  c.rng_state = SerializeRng(Rng(5));
  const Checkpoint back = CheckpointFromJson(CheckpointToJson(c));
  EXPECT_EQ(back.policy, cfg);
  EXPECT_EQ(back.params.Flatten(), c.params.Flatten());
  EXPECT_EQ(back.epochs_completed, 3);
  Rng r1 = DeserializeRng(back.rng_state), r2(5);
  EXPECT_EQ(r1(), r2());

  nlohmann::json doc = CheckpointToJson(c);
  doc["policy"]["num_devices"] = 3;
  EXPECT_THROW(CheckpointFromJson(doc), Error);
  doc = CheckpointToJson(c);
  doc["format"] = "other";
  EXPECT_THROW(CheckpointFromJson(doc), Error);
}

}  // namespace
}  // namespace placement
