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
#ifndef PLACEMENT_GRAPH_H_
#define PLACEMENT_GRAPH_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace placement {

using NodeId = int;
using Edge = std::pair<NodeId, NodeId>;

// A coarsened cluster of operations that is always placed on one device.
struct OpGroup {
  NodeId id = 0;
  // Seconds per device. A single entry applies to every device.
  std::vector<double> compute_seconds;
  double output_bytes = 0.0;
  // Original operation identifiers folded into this group, if known.
  std::vector<std::string> members;

  // Compute seconds on `device`, broadcasting a scalar cost.
  double ComputeOn(int device) const;

  bool operator==(const OpGroup&) const = default;
};

// Immutable, validated DAG of op groups. Node ids are dense 0..size()-1 and
// edges are kept sorted; adjacency lists are sorted by id.
class ComputationGraph {
 public:
  ComputationGraph() = default;

  // Throws Error on duplicate or non-dense ids, dangling or duplicate edges,
  // self-loops, cycles and negative or non-finite costs.
  ComputationGraph(std::string name, std::vector<OpGroup> nodes,
                   std::vector<Edge> edges);

  const std::string& name() const { return name_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  bool empty() const { return nodes_.empty(); }

  std::span<const OpGroup> nodes() const { return nodes_; }
  const OpGroup& node(NodeId v) const { return nodes_.at(v); }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const NodeId> parents(NodeId v) const { return parents_.at(v); }
  std::span<const NodeId> children(NodeId v) const { return children_.at(v); }

  bool HasEdge(NodeId src, NodeId dst) const;
  bool IsSink(NodeId v) const { return children_.at(v).empty(); }

  // Largest per-device cost vector length (1 for all-scalar graphs).
  int MaxCostEntries() const;

  // Logical equality: name, nodes and edge set.
  bool operator==(const ComputationGraph& other) const;

 private:
  std::string name_;
  std::vector<OpGroup> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> children_;
};

// Dynamic bitset over node ids.
class NodeSet {
 public:
  NodeSet() = default;
  explicit NodeSet(int size);

  int size() const { return size_; }
  bool contains(NodeId v) const;
  void insert(NodeId v);
  void erase(NodeId v);
  void UnionWith(const NodeSet& other);
  int count() const;
  std::vector<NodeId> ToVector() const;

  bool operator==(const NodeSet&) const = default;

 private:
  int size_ = 0;
  std::vector<std::uint64_t> words_;
};

// Transitive closure of a graph: the nodes that can reach each node and the
// nodes each node can reach.
class ReachabilityIndex {
 public:
  explicit ReachabilityIndex(const ComputationGraph& graph);

  int size() const { return static_cast<int>(ancestors_.size()); }
  const NodeSet& ancestors(NodeId v) const { return ancestors_.at(v); }
  const NodeSet& descendants(NodeId v) const { return descendants_.at(v); }

 private:
  std::vector<NodeSet> ancestors_;
  std::vector<NodeSet> descendants_;
};

struct RelationSets {
  std::vector<NodeId> parents;   // can reach v
  std::vector<NodeId> children;  // reachable from v
  std::vector<NodeId> parallel;  // neither
};

// Throws Error(kInvalidArgument) if v is out of range.
RelationSets GetRelationSets(const ReachabilityIndex& index, NodeId v);

// Kahn order. Without a seed ties go to the smallest id; with a seed the next
// node is drawn uniformly from the ready set.
std::vector<NodeId> TopologicalOrder(const ComputationGraph& graph,
                                     std::optional<std::uint64_t> seed = {});

// Longest-path depth from the sources (sources have depth 0).
std::vector<int> TopologicalDepth(const ComputationGraph& graph);

struct CoarseningResult {
  ComputationGraph coarse;
  // colocation[original id] = coarse id.
  std::vector<NodeId> colocation;
};

// Merge-and-colocate grouping using output bytes as the cost metric. Merging
// continues while the graph has more than `target_size` groups or some group
// costs less than `cost_threshold`; the cheapest mergeable group is folded
// into its first contraction-safe successor, else into the contraction-safe
// predecessor with the largest output tensor. Isolated groups never merge.
CoarseningResult MergeAndColocate(const ComputationGraph& graph,
                                  int target_size, double cost_threshold);

// JSON graph document.
ComputationGraph GraphFromJson(const nlohmann::json& doc);
nlohmann::json GraphToJson(const ComputationGraph& graph);
ComputationGraph LoadGraph(std::string_view text);
std::string SaveGraph(const ComputationGraph& graph);
ComputationGraph LoadGraphFile(const std::string& path);
void SaveGraphFile(const ComputationGraph& graph, const std::string& path);

}  // namespace placement

#endif  // PLACEMENT_GRAPH_H_
