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
#include <functional>
#include <set>

#include <gtest/gtest.h>

#include "placement/error.h"
#include "placement/graph.h"
#include "testing.h"

namespace placement {
namespace {

using testing::Chain;
using testing::Diamond;
using testing::MakeGraph;
using testing::RandomDag;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

TEST(LoadGraph, TwoNodeChain) {
  const ComputationGraph g = LoadGraph(R"({"name":"c","nodes":[
      {"id":0,"cost":[1.0],"output_bytes":8},{"id":1,"cost":[2.0]}],
      "edges":[[0,1]]})");
  ASSERT_EQ(g.size(), 2);
  EXPECT_TRUE(g.HasEdge(0, 1));
  EXPECT_DOUBLE_EQ(g.node(1).ComputeOn(1), 2.0);
  EXPECT_DOUBLE_EQ(g.node(0).output_bytes, 8.0);
}

TEST(LoadGraph, Errors) {
  EXPECT_EQ(CodeOf([] { LoadGraph("{nope"); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([] {
              LoadGraph(R"({"nodes":[{"id":0,"cost":1},{"id":1,"cost":1}],
                            "edges":[[1,0],[0,1]]})");
            }),
            ErrorCode::kCycle);
  EXPECT_EQ(CodeOf([] {
              LoadGraph(R"({"nodes":[{"id":0,"cost":1},{"id":0,"cost":1}],
                            "edges":[]})");
            }),
            ErrorCode::kDuplicateId);
  EXPECT_EQ(CodeOf([] {
              LoadGraph(R"({"nodes":[{"id":0,"cost":1}],"edges":[[0,5]]})");
            }),
            ErrorCode::kDanglingEdge);
  EXPECT_EQ(CodeOf([] {
              LoadGraph(R"({"nodes":[{"id":0,"cost":-1}],"edges":[]})");
            }),
            ErrorCode::kNegativeCost);
  EXPECT_EQ(CodeOf([] {
              LoadGraph(R"({"nodes":[{"id":0,"cost":1}],"edges":[[0,0]]})");
            }),
            ErrorCode::kCycle);
}

TEST(LoadGraph, CycleMessageNamesNodes) {
  try {
    LoadGraph(R"({"nodes":[{"id":0,"cost":1},{"id":1,"cost":1},
                  {"id":2,"cost":1}],"edges":[[0,1],[1,2],[2,1]]})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCycle);
    const std::string what = e.what();
    EXPECT_NE(what.find('1'), std::string::npos);
    EXPECT_NE(what.find('2'), std::string::npos);
  }
}

TEST(LoadGraph, SparseIdsAreRemapped) {
  const ComputationGraph g = LoadGraph(
      R"({"name":"s","nodes":[{"id":7,"cost":1},{"id":3,"cost":2}],
          "edges":[[3,7]]})");
  ASSERT_EQ(g.size(), 2);
  EXPECT_TRUE(g.HasEdge(0, 1));
  EXPECT_EQ(g.node(0).members, std::vector<std::string>{"3"});
  EXPECT_EQ(g.node(1).members, std::vector<std::string>{"7"});
  EXPECT_DOUBLE_EQ(g.node(0).ComputeOn(0), 2.0);
}

TEST(LoadGraph, RoundTrip) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ComputationGraph g = RandomDag(rng, 12, 0.3, 0.0, 5.0, 0.0, 1e6);
    EXPECT_EQ(LoadGraph(SaveGraph(g)), g);
  }
}

TEST(Reachability, Chain) {
  const ComputationGraph g = Chain({1, 1, 1});
  const ReachabilityIndex idx(g);
  EXPECT_EQ(idx.ancestors(2).ToVector(), (std::vector<NodeId>{0, 1}));
  EXPECT_EQ(idx.descendants(0).ToVector(), (std::vector<NodeId>{1, 2}));
  for (NodeId v = 0; v < 3; ++v) {
    EXPECT_TRUE(GetRelationSets(idx, v).parallel.empty());
  }
  const RelationSets s = GetRelationSets(idx, 1);
  EXPECT_EQ(s.parents, std::vector<NodeId>{0});
  EXPECT_EQ(s.children, std::vector<NodeId>{2});
}

TEST(Reachability, Diamond) {
  const ReachabilityIndex idx(Diamond());
  const RelationSets b = GetRelationSets(idx, 1);
  EXPECT_EQ(b.parents, std::vector<NodeId>{0});
  EXPECT_EQ(b.children, std::vector<NodeId>{3});
  EXPECT_EQ(b.parallel, std::vector<NodeId>{2});
  EXPECT_EQ(GetRelationSets(idx, 2).parallel, std::vector<NodeId>{1});
  EXPECT_THROW(GetRelationSets(idx, 4), Error);
}

TEST(Reachability, IsolatedNode) {
  const ComputationGraph g = MakeGraph("iso", {1, 1, 1}, {}, {});
  const RelationSets s = GetRelationSets(ReachabilityIndex(g), 1);
  EXPECT_TRUE(s.parents.empty());
  EXPECT_TRUE(s.children.empty());
  EXPECT_EQ(s.parallel, (std::vector<NodeId>{0, 2}));
}

// Brute-force DFS closure versus the bitset index, up to 64 nodes.
TEST(Reachability, MatchesDfs) {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(UniformIndex(rng, 64));
    const ComputationGraph g = RandomDag(rng, n, 0.08, 0, 1, 0, 1);
    const ReachabilityIndex idx(g);
    for (NodeId s = 0; s < n; ++s) {
      std::vector<char> seen(n, 0);
      std::vector<NodeId> stack{s};
      while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        for (NodeId w : g.children(u)) {
          if (!seen[w]) {
            seen[w] = 1;
            stack.push_back(w);
          }
        }
      }
      for (NodeId t = 0; t < n; ++t) {
        ASSERT_EQ(idx.descendants(s).contains(t), seen[t] != 0);
        ASSERT_EQ(idx.ancestors(t).contains(s), seen[t] != 0);
      }
      const RelationSets r = GetRelationSets(idx, s);
      ASSERT_EQ(static_cast<int>(r.parents.size() + r.children.size() +
                                 r.parallel.size()),
                n - 1);
    }
  }
}

TEST(TopologicalOrder, Deterministic) {
  EXPECT_EQ(TopologicalOrder(Diamond()), (std::vector<NodeId>{0, 1, 2, 3}));
  EXPECT_EQ(TopologicalOrder(Chain({1, 1, 1, 1})),
            (std::vector<NodeId>{0, 1, 2, 3}));
}

TEST(TopologicalOrder, SeededIsLinearExtension) {
  Rng rng(5);
  std::set<std::vector<NodeId>> seen;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::vector<NodeId> o = TopologicalOrder(Diamond(), seed);
    seen.insert(o);
    std::vector<int> pos(4);
    for (int i = 0; i < 4; ++i) pos[o[i]] = i;
    const ComputationGraph d = Diamond();
    for (const auto& [u, v] : d.edges()) EXPECT_LT(pos[u], pos[v]);
  }
  EXPECT_EQ(seen.size(), 2u);
  for (int trial = 0; trial < 30; ++trial) {
    const ComputationGraph g = RandomDag(rng, 20, 0.2, 0, 1, 0, 1);
    const std::vector<NodeId> o = TopologicalOrder(g, trial);
    std::vector<int> pos(g.size());
    for (int i = 0; i < g.size(); ++i) pos[o[i]] = i;
    for (const auto& [u, v] : g.edges()) ASSERT_LT(pos[u], pos[v]);
  }
}

bool IsAcyclic(const ComputationGraph& g) {
  try {
    ComputationGraph copy("x", std::vector<OpGroup>(g.nodes().begin(), g.nodes().end()),
                          std::vector<Edge>(g.edges().begin(), g.edges().end()));
    return copy.size() == g.size();
  } catch (const Error&) {
    return false;
  }
}

TEST(MergeAndColocate, ChainMergesCheapestNode) {
  const ComputationGraph g = Chain({1, 2, 3}, {8, 1, 8});
  const CoarseningResult r = MergeAndColocate(g, 3, 4.0);
  ASSERT_EQ(r.coarse.size(), 2);
  EXPECT_EQ(r.colocation[0], 0);
  EXPECT_EQ(r.colocation[1], r.colocation[2]);
  EXPECT_TRUE(r.coarse.HasEdge(0, 1));
  EXPECT_DOUBLE_EQ(r.coarse.node(1).ComputeOn(0), 5.0);
  // b's tensor only fed c, so it became internal and is dropped.
  EXPECT_DOUBLE_EQ(r.coarse.node(1).output_bytes, 8.0);
}

TEST(MergeAndColocate, NoOpReturnsIdentity) {
  const ComputationGraph g = Diamond();
  const CoarseningResult r = MergeAndColocate(g, 4, 0.0);
  EXPECT_EQ(r.coarse, g);
  EXPECT_EQ(r.colocation, (std::vector<NodeId>{0, 1, 2, 3}));
  EXPECT_THROW(MergeAndColocate(g, 0, 0.0), Error);
}

TEST(MergeAndColocate, LayeredGraphReachesTarget) {
  // Two layers of five, fully connected between the layers.
  std::vector<Edge> edges;
  for (int u = 0; u < 5; ++u) {
    for (int v = 5; v < 10; ++v) edges.emplace_back(u, v);
  }
  std::vector<double> costs, bytes;
  for (int i = 0; i < 10; ++i) {
    costs.push_back(1.0 + i);
    bytes.push_back(100.0 + 7 * ((i * 3) % 10));
  }
  const ComputationGraph g = MakeGraph("layers", costs, bytes, edges);
  const CoarseningResult r = MergeAndColocate(g, 5, 0.0);
  EXPECT_EQ(r.coarse.size(), 5);
  EXPECT_TRUE(IsAcyclic(r.coarse));
  double total = 0.0;
  for (const OpGroup& n : r.coarse.nodes()) total += n.ComputeOn(0);
  EXPECT_DOUBLE_EQ(total, 55.0);
}

// Compute conservation, DAG-ness and a total colocation map on random graphs.
TEST(MergeAndColocate, RandomProperties) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(UniformIndex(rng, 30));
    const ComputationGraph g = RandomDag(rng, n, 0.15, 0.0, 3.0, 0.0, 100.0);
    const int target = 1 + static_cast<int>(UniformIndex(rng, n));
    const double threshold = UniformReal(rng, 0.0, 60.0);
    const CoarseningResult r = MergeAndColocate(g, target, threshold);
    ASSERT_TRUE(IsAcyclic(r.coarse));
    ASSERT_EQ(static_cast<int>(r.colocation.size()), n);
    std::vector<double> sum(r.coarse.size(), 0.0);
    for (NodeId v = 0; v < n; ++v) {
      ASSERT_GE(r.colocation[v], 0);
      ASSERT_LT(r.colocation[v], r.coarse.size());
      sum[r.colocation[v]] += g.node(v).ComputeOn(0);
    }
    double before = 0.0, after = 0.0;
    for (NodeId v = 0; v < n; ++v) before += g.node(v).ComputeOn(0);
    for (const OpGroup& c : r.coarse.nodes()) after += c.ComputeOn(0);
    ASSERT_NEAR(before, after, 1e-9 * std::max(1.0, before));
    for (NodeId c = 0; c < r.coarse.size(); ++c) {
      ASSERT_NEAR(sum[c], r.coarse.node(c).ComputeOn(0), 1e-9);
    }
    // Every original edge maps to a coarse edge or becomes internal.
    for (const auto& [u, v] : g.edges()) {
      const NodeId cu = r.colocation[u], cv = r.colocation[v];
      ASSERT_TRUE(cu == cv || r.coarse.HasEdge(cu, cv));
    }
  }
}

TEST(NodeSet, Basics) {
  NodeSet s(130);
  s.insert(0);
  s.insert(64);
  s.insert(129);
  EXPECT_EQ(s.count(), 3);
  EXPECT_TRUE(s.contains(64));
  s.erase(64);
  EXPECT_FALSE(s.contains(64));
  NodeSet t(130);
  t.insert(5);
  s.UnionWith(t);
  EXPECT_EQ(s.ToVector(), (std::vector<NodeId>{0, 5, 129}));
}

TEST(TopologicalDepth, Diamond) {
  EXPECT_EQ(TopologicalDepth(Diamond()), (std::vector<int>{0, 1, 1, 2}));
}

}  // namespace
}  // namespace placement
