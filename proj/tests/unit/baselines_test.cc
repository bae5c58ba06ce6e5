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
#include <limits>

#include <gtest/gtest.h>

#include "placement/baselines.h"
#include "placement/error.h"
#include "placement/simulator.h"
#include "testing.h"

namespace placement {
namespace {

using testing::Chain;
using testing::Diamond;
using testing::DiamondTopology;
using testing::MakeGraph;
using testing::RandomDag;

// Brute force over all D^n placements, written without the library search.
double BruteForceOptimum(const ComputationGraph& g, const DeviceTopology& topo,
                         const RewardConfig& reward) {
  const int n = g.size(), d = topo.size();
  Placement p{std::vector<int>(n, 0)};
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    best = std::min(best, PenalizedRuntime(Simulate(g, topo, p), reward));
    int i = n - 1;
    while (i >= 0 && p.device[i] == d - 1) p.device[i--] = 0;
    if (i < 0) break;
    ++p.device[i];
  }
  return best;
}

TEST(SingleDevice, AllZerosAndSerialSum) {
  const Placement p = PlaceSingleDevice(Chain({1, 2, 3}), DiamondTopology());
  EXPECT_EQ(p.device, (std::vector<int>{0, 0, 0}));
  EXPECT_EQ(Simulate(Chain({1, 2, 3}, {1e6, 1e6, 1e6}), DiamondTopology(), p)
                .makespan_seconds,
            6.0);
  const SimulationResult d =
      Simulate(Diamond(), DiamondTopology(), PlaceSingleDevice(Diamond(), DiamondTopology()));
  EXPECT_EQ(d.makespan_seconds, 6.0);
  EXPECT_TRUE(d.transfers.empty());
}

TEST(Random, SeededAndSingleDevice) {
  const ComputationGraph g = Diamond();
  EXPECT_EQ(PlaceRandom(g, DiamondTopology(), 3),
            PlaceRandom(g, DiamondTopology(), 3));
  const DeviceTopology one = DeviceTopology::Uniform(1, 1e9, 1e6);
  EXPECT_EQ(PlaceRandom(g, one, 3), PlaceSingleDevice(g, one));
}

TEST(Random, FrequenciesWithinThreeSigma) {
  const ComputationGraph g = Diamond();
  const DeviceTopology topo = DeviceTopology::Uniform(3, 1e9, 1e6);
  constexpr int kSeeds = 10000;
  std::vector<std::vector<int>> counts(4, std::vector<int>(3, 0));
  for (int s = 0; s < kSeeds; ++s) {
    const Placement p = PlaceRandom(g, topo, s);
    for (int v = 0; v < 4; ++v) ++counts[v][p[v]];
  }
  const double q = 1.0 / 3.0;
  const double sigma = std::sqrt(kSeeds * q * (1 - q));
  for (const auto& row : counts) {
    for (int c : row) EXPECT_LE(std::abs(c - kSeeds * q), 3 * sigma);
  }
}

TEST(MinCut, IndependentEqualNodes) {
  const ComputationGraph g = MakeGraph("iso", {1, 1, 1, 1}, {1, 1, 1, 1}, {});
  PartitionerConfig cfg;
  cfg.balance_tolerance = 0.0;
  const MinCutResult r = PlaceBalancedMinCut(g, DiamondTopology(), cfg);
  EXPECT_EQ(std::count(r.placement.device.begin(), r.placement.device.end(), 0),
            2);
  EXPECT_EQ(CutBytes(g, r.placement), 0.0);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(MinCut, HugeEdgeColocates) {
  const ComputationGraph g = Chain({1, 1}, {1e12, 0});
  PartitionerConfig cfg;
  cfg.balance_tolerance = 1.0;
  const MinCutResult r = PlaceBalancedMinCut(g, DiamondTopology(), cfg);
  EXPECT_EQ(r.placement.device[0], r.placement.device[1]);
  EXPECT_EQ(CutBytes(g, r.placement), 0.0);
}

TEST(MinCut, TwoChainsSplit) {
  const ComputationGraph g = MakeGraph("two", {1, 2, 3, 3, 2, 1},
                                       {5, 5, 0, 5, 5, 0},
                                       {{0, 1}, {1, 2}, {3, 4}, {4, 5}});
  const MinCutResult r =
      PlaceBalancedMinCut(g, DiamondTopology(), PartitionerConfig{});
  EXPECT_EQ(CutBytes(g, r.placement), 0.0);
  EXPECT_NE(r.placement[0], r.placement[3]);
  EXPECT_EQ(r.placement[0], r.placement[2]);
  EXPECT_EQ(r.placement[3], r.placement[5]);
}

TEST(MinCut, RelaxesInfeasibleBalance) {
  // One node carries 3/4 of the compute, so eps = 0 cannot hold on 2 devices.
  const ComputationGraph g = MakeGraph("heavy", {3, 1}, {0, 0}, {});
  PartitionerConfig cfg;
  cfg.balance_tolerance = 0.0;
  const MinCutResult r = PlaceBalancedMinCut(g, DiamondTopology(), cfg);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_GT(r.balance_tolerance, 0.0);
  const std::vector<double> loads =
      DeviceLoads(g, DiamondTopology(), r.placement);
  const double bound = BalanceBound(g, DiamondTopology(), r.balance_tolerance);
  for (double l : loads) EXPECT_LE(l, bound);
}

TEST(MinCut, BalanceAndMonotoneRefinementOnRandomGraphs) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = UniformInt(rng, 2, 12);
    const ComputationGraph g = RandomDag(rng, n, 0.3, 0.1, 3.0, 0, 1e7);
    const DeviceTopology topo =
        DeviceTopology::Uniform(UniformInt(rng, 2, 4), 1e9, 1e6);
    PartitionerConfig cfg;
    cfg.balance_tolerance = UniformReal(rng, 0.0, 0.5);
    const MinCutResult r = PlaceBalancedMinCut(g, topo, cfg);
    ValidatePlacement(g, topo, r.placement);
    const double bound = BalanceBound(g, topo, r.balance_tolerance);
    for (double l : DeviceLoads(g, topo, r.placement)) {
      ASSERT_LE(l, bound * (1 + 1e-12));
    }
    ASSERT_FALSE(r.cut_history.empty());
    for (std::size_t i = 1; i < r.cut_history.size(); ++i) {
      ASSERT_LE(r.cut_history[i], r.cut_history[i - 1]);
    }
    ASSERT_EQ(r.cut_history.back(), CutBytes(g, r.placement));
    ASSERT_EQ(PlaceBalancedMinCut(g, topo, cfg).placement, r.placement);
  }
}

TEST(Expert, LayersPerDevice) {
  // Four layers of two nodes each, fully connected between layers.
  std::vector<Edge> edges;
  for (int l = 0; l < 3; ++l) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) edges.emplace_back(2 * l + a, 2 * l + 2 + b);
    }
  }
  const ComputationGraph g =
      MakeGraph("layers", std::vector<double>(8, 1.0),
                std::vector<double>(8, 0.0), edges);
  const Placement p =
      PlaceExpertChain(g, DeviceTopology::Uniform(4, 1e9, 1e6));
  EXPECT_EQ(p.device, (std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3}));
}

TEST(Expert, ChainSplitsInHalf) {
  const Placement p = PlaceExpertChain(Chain({1, 1, 1, 1, 1, 1}),
                                       DiamondTopology());
  EXPECT_EQ(p.device, (std::vector<int>{0, 0, 0, 1, 1, 1}));
  EXPECT_EQ(PlaceExpertChain(Diamond(), DeviceTopology::Uniform(1, 1e9, 1e6))
                .device,
            (std::vector<int>{0, 0, 0, 0}));
}

TEST(Exhaustive, ChainColocates) {
  const ComputationGraph g = Chain({1, 1}, {1e9, 0});
  const SearchResult r = ExhaustiveSearch(g, DiamondTopology(), {});
  EXPECT_EQ(r.placement.device, (std::vector<int>{0, 0}));
  EXPECT_EQ(r.runtime, 2.0);
  EXPECT_EQ(r.evaluated, 4u);
}

TEST(Exhaustive, BranchesSplit) {
  // 1 MB at 1 MB/s is a 1 s transfer; branches cost 10 s each.
  const ComputationGraph g =
      MakeGraph("branches", {0.1, 10, 10, 0.1}, {1e6, 1e6, 1e6, 0},
                {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  const SearchResult r = ExhaustiveSearch(g, DiamondTopology(), {});
  EXPECT_NE(r.placement[1], r.placement[2]);
  EXPECT_LT(r.runtime, Simulate(g, DiamondTopology(),
                                PlaceSingleDevice(g, DiamondTopology()))
                           .makespan_seconds);
}

TEST(Exhaustive, SingleDeviceAndBudget) {
  const DeviceTopology one = DeviceTopology::Uniform(1, 1e9, 1e6);
  const SearchResult r = ExhaustiveSearch(Diamond(), one, {});
  EXPECT_EQ(r.evaluated, 1u);
  EXPECT_EQ(r.runtime, 6.0);
  try {
    ExhaustiveSearch(Diamond(), DiamondTopology(), {}, 15);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBudgetExceeded);
  }
}

TEST(Exhaustive, MatchesBruteForceAndBeatsEverySchemeOnSmallInstances) {
  Rng rng(5);
  RewardConfig reward;
  reward.memory_threshold_bytes = 5e6;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = UniformInt(rng, 1, 7);
    const ComputationGraph g = RandomDag(rng, n, 0.35, 0.1, 3.0, 0, 4e6);
    const DeviceTopology topo =
        DeviceTopology::Uniform(UniformInt(rng, 1, 3), 1e9, 2e6);
    const SearchResult r = ExhaustiveSearch(g, topo, reward, 1 << 20, 2);
    ASSERT_EQ(r.runtime, BruteForceOptimum(g, topo, reward));
    ComparisonOptions opt;
    opt.seed = trial;
    for (const SchemeResult& s : CompareSchemes(g, topo, reward, opt)) {
      ASSERT_LE(r.runtime, s.penalized_runtime) << s.scheme;
    }
  }
}

TEST(Exhaustive, ThreadCountDoesNotChangeResult) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const ComputationGraph g = RandomDag(rng, 9, 0.3, 0.5, 1.5, 1e5, 2e6);
    const SearchResult a = ExhaustiveSearch(g, DiamondTopology(), {}, 1 << 20, 1);
    const SearchResult b = ExhaustiveSearch(g, DiamondTopology(), {}, 1 << 20, 3);
    ASSERT_EQ(a.placement, b.placement);
    ASSERT_EQ(a.runtime, b.runtime);
  }
}

TEST(Exhaustive, TiesGoToLexicographicMinimum) {
  // Two isolated equal nodes: {0,1} and {1,0} tie, as do {0,0} and {1,1}.
  const ComputationGraph g = MakeGraph("tie", {1, 1}, {0, 0}, {});
  EXPECT_EQ(ExhaustiveSearch(g, DiamondTopology(), {}).placement.device,
            (std::vector<int>{0, 1}));
}

TEST(Comparison, ReportsRegenerateIdentically) {
  Rng rng(12);
  const ComputationGraph g = RandomDag(rng, 8, 0.3, 0.5, 2.0, 1e5, 5e6);
  ComparisonOptions opt;
  opt.seed = 4;
  const auto a = CompareSchemes(g, DiamondTopology(), {}, opt);
  opt.threads = 2;
  const auto b = CompareSchemes(g, DiamondTopology(), {}, opt);
  EXPECT_EQ(ComparisonToCsv(g, a), ComparisonToCsv(g, b));
  EXPECT_EQ(ComparisonToJson(g, a).dump(), ComparisonToJson(g, b).dump());
  std::vector<std::string> names;
  for (const auto& s : a) names.push_back(s.scheme);
  EXPECT_EQ(names, (std::vector<std::string>{"single_device", "random", "mincut",
                                             "expert", "exhaustive"}));
  EXPECT_EQ(ComparisonToCsv(g, a).substr(0, 61),
            "graph,scheme,makespan_s,peak_memory_bytes,penalized_runtime_s");
}

TEST(Comparison, SkipsExhaustiveOverBudget) {
  Rng rng(13);
  const ComputationGraph g = RandomDag(rng, 12, 0.3, 0.5, 2.0, 1e5, 5e6);
  ComparisonOptions opt;
  opt.search_budget = 100;
  const auto r = CompareSchemes(g, DiamondTopology(), {}, opt);
  EXPECT_EQ(r.size(), 4u);
}

}  // namespace
}  // namespace placement
