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
#include "placement/graph.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <set>

#include "placement/error.h"
#include "placement/io.h"
#include "placement/random.h"

namespace placement {

double OpGroup::ComputeOn(int device) const {
  if (compute_seconds.size() == 1) return compute_seconds[0];
  return compute_seconds.at(device);
}

namespace {

void ValidateCosts(const OpGroup& node) {
  if (node.compute_seconds.empty()) {
    throw Error(ErrorCode::kNegativeCost,
                "node " + std::to_string(node.id) + " has no compute cost");
  }
  for (double c : node.compute_seconds) {
    if (!std::isfinite(c) || c < 0.0) {
      throw Error(ErrorCode::kNegativeCost,
                  "node " + std::to_string(node.id) +
                      " has a negative or non-finite compute cost");
    }
  }
  if (!std::isfinite(node.output_bytes) || node.output_bytes < 0.0) {
    throw Error(ErrorCode::kNegativeCost,
                "node " + std::to_string(node.id) +
                    " has negative or non-finite output_bytes");
  }
}

// Returns one cycle among the nodes Kahn's algorithm could not remove.
std::vector<NodeId> FindCycle(const std::vector<std::vector<NodeId>>& children,
                              const std::vector<int>& remaining_indegree) {
  const int n = static_cast<int>(children.size());
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<NodeId> stack;
  std::vector<NodeId> cycle;
  std::function<bool(NodeId)> dfs = [&](NodeId u) {
    state[u] = 1;
    stack.push_back(u);
    for (NodeId w : children[u]) {
      if (remaining_indegree[w] == 0) continue;
      if (state[w] == 1) {
        auto it = std::find(stack.begin(), stack.end(), w);
        cycle.assign(it, stack.end());
        return true;
      }
      if (state[w] == 0 && dfs(w)) return true;
    }
    stack.pop_back();
    state[u] = 2;
    return false;
  };
  for (NodeId v = 0; v < n; ++v) {
    if (remaining_indegree[v] > 0 && state[v] == 0 && dfs(v)) break;
  }
  return cycle;
}

std::string JoinIds(const std::vector<NodeId>& ids) {
  std::string out;
  for (NodeId id : ids) {
    if (!out.empty()) out += "->";
    out += std::to_string(id);
  }
  return out;
}

}  // namespace

ComputationGraph::ComputationGraph(std::string name, std::vector<OpGroup> nodes,
                                   std::vector<Edge> edges)
    : name_(std::move(name)), nodes_(std::move(nodes)), edges_(std::move(edges)) {
  const int n = size();
  for (int i = 0; i < n; ++i) {
    if (nodes_[i].id != i) {
      throw Error(ErrorCode::kDuplicateId,
                  "node ids must be dense and ordered; found id " +
                      std::to_string(nodes_[i].id) + " at position " +
                      std::to_string(i));
    }
    ValidateCosts(nodes_[i]);
  }
  parents_.assign(n, {});
  children_.assign(n, {});
  std::sort(edges_.begin(), edges_.end());
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto [u, v] = edges_[i];
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw Error(ErrorCode::kDanglingEdge,
                  "edge [" + std::to_string(u) + "," + std::to_string(v) +
                      "] references a missing node");
    }
    if (u == v) {
      throw Error(ErrorCode::kCycle, "self-loop on node " + std::to_string(u));
    }
    if (i > 0 && edges_[i - 1] == edges_[i]) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate edge [" + std::to_string(u) + "," +
                      std::to_string(v) + "]");
    }
    children_[u].push_back(v);
    parents_[v].push_back(u);
  }
  for (auto& p : parents_) std::sort(p.begin(), p.end());

  std::vector<int> indegree(n);
  for (int v = 0; v < n; ++v) indegree[v] = static_cast<int>(parents_[v].size());
  std::vector<NodeId> ready;
  for (int v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  int visited = 0;
  while (!ready.empty()) {
    NodeId u = ready.back();
    ready.pop_back();
    ++visited;
    for (NodeId w : children_[u]) {
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  if (visited != n) {
    throw Error(ErrorCode::kCycle,
                "cycle detected: " + JoinIds(FindCycle(children_, indegree)));
  }
}

bool ComputationGraph::HasEdge(NodeId src, NodeId dst) const {
  const auto& c = children_.at(src);
  return std::binary_search(c.begin(), c.end(), dst);
}

int ComputationGraph::MaxCostEntries() const {
  int m = 1;
  for (const auto& node : nodes_) {
    m = std::max(m, static_cast<int>(node.compute_seconds.size()));
  }
  return m;
}

bool ComputationGraph::operator==(const ComputationGraph& other) const {
  return name_ == other.name_ && nodes_ == other.nodes_ &&
         edges_ == other.edges_;
}

NodeSet::NodeSet(int size)
    : size_(size), words_((static_cast<std::size_t>(size) + 63) / 64, 0) {}

bool NodeSet::contains(NodeId v) const {
  return (words_[v >> 6] >> (v & 63)) & 1ULL;
}

void NodeSet::insert(NodeId v) { words_[v >> 6] |= 1ULL << (v & 63); }

void NodeSet::erase(NodeId v) { words_[v >> 6] &= ~(1ULL << (v & 63)); }

void NodeSet::UnionWith(const NodeSet& other) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
}

int NodeSet::count() const {
  int c = 0;
  for (auto w : words_) c += std::popcount(w);
  return c;
}

std::vector<NodeId> NodeSet::ToVector() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    std::uint64_t w = words_[i];
    while (w) {
      out.push_back(static_cast<NodeId>(i * 64 + std::countr_zero(w)));
      w &= w - 1;
    }
  }
  return out;
}

ReachabilityIndex::ReachabilityIndex(const ComputationGraph& graph) {
  const int n = graph.size();
  ancestors_.assign(n, NodeSet(n));
  descendants_.assign(n, NodeSet(n));
  const auto order = TopologicalOrder(graph);
  for (NodeId v : order) {
    for (NodeId p : graph.parents(v)) {
      ancestors_[v].UnionWith(ancestors_[p]);
      ancestors_[v].insert(p);
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    for (NodeId c : graph.children(v)) {
      descendants_[v].UnionWith(descendants_[c]);
      descendants_[v].insert(c);
    }
  }
}

RelationSets GetRelationSets(const ReachabilityIndex& index, NodeId v) {
  if (v < 0 || v >= index.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "node " + std::to_string(v) + " out of range");
  }
  RelationSets sets;
  const auto& anc = index.ancestors(v);
  const auto& desc = index.descendants(v);
  for (NodeId u = 0; u < index.size(); ++u) {
    if (u == v) continue;
    if (anc.contains(u)) {
      sets.parents.push_back(u);
    } else if (desc.contains(u)) {
      sets.children.push_back(u);
    } else {
      sets.parallel.push_back(u);
    }
  }
  return sets;
}

std::vector<NodeId> TopologicalOrder(const ComputationGraph& graph,
                                     std::optional<std::uint64_t> seed) {
  const int n = graph.size();
  std::vector<int> indegree(n);
  for (int v = 0; v < n; ++v) {
    indegree[v] = static_cast<int>(graph.parents(v).size());
  }
  std::vector<NodeId> order;
  order.reserve(n);
  if (!seed) {
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (int v = 0; v < n; ++v) {
      if (indegree[v] == 0) ready.push(v);
    }
    while (!ready.empty()) {
      const NodeId u = ready.top();
      ready.pop();
      order.push_back(u);
      for (NodeId w : graph.children(u)) {
        if (--indegree[w] == 0) ready.push(w);
      }
    }
    return order;
  }
  Rng rng(*seed);
  std::vector<NodeId> ready;
  for (int v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  while (!ready.empty()) {
    const auto pick = UniformIndex(rng, ready.size());
    const NodeId u = ready[pick];
    ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(pick));
    order.push_back(u);
    for (NodeId w : graph.children(u)) {
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  return order;
}

std::vector<int> TopologicalDepth(const ComputationGraph& graph) {
  std::vector<int> depth(graph.size(), 0);
  for (NodeId v : TopologicalOrder(graph)) {
    for (NodeId p : graph.parents(v)) depth[v] = std::max(depth[v], depth[p] + 1);
  }
  return depth;
}

namespace {

struct WorkGroup {
  bool alive = true;
  std::vector<double> compute;
  double bytes = 0.0;
  std::vector<NodeId> originals;
  std::set<NodeId> succ;
  std::set<NodeId> pred;
};

std::vector<double> AddCosts(const std::vector<double>& a,
                             const std::vector<double>& b) {
  if (a.size() == b.size()) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
  }
  if (a.size() == 1 || b.size() == 1) {
    const auto& wide = a.size() == 1 ? b : a;
    const double scalar = a.size() == 1 ? a[0] : b[0];
    std::vector<double> out(wide.size());
    for (std::size_t i = 0; i < wide.size(); ++i) out[i] = wide[i] + scalar;
    return out;
  }
  throw Error(ErrorCode::kShapeMismatch,
              "cannot merge cost vectors of lengths " +
                  std::to_string(a.size()) + " and " + std::to_string(b.size()));
}

// True if `to` is reachable from `from` without using the direct edge.
bool HasIndirectPath(const std::vector<WorkGroup>& groups, NodeId from,
                     NodeId to) {
  std::vector<char> seen(groups.size(), 0);
  std::vector<NodeId> stack;
  for (NodeId s : groups[from].succ) {
    if (s != to) stack.push_back(s);
  }
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    if (u == to) return true;
    if (seen[u]) continue;
    seen[u] = 1;
    for (NodeId s : groups[u].succ) stack.push_back(s);
  }
  return false;
}

std::optional<NodeId> ChooseMergeTarget(const std::vector<WorkGroup>& groups,
                                        NodeId x) {
  // Every successor receives the same tensor, so the smallest id wins.
  for (NodeId s : groups[x].succ) {
    if (!HasIndirectPath(groups, x, s)) return s;
  }
  std::vector<NodeId> preds(groups[x].pred.begin(), groups[x].pred.end());
  std::stable_sort(preds.begin(), preds.end(), [&](NodeId a, NodeId b) {
    return groups[a].bytes > groups[b].bytes;
  });
  for (NodeId p : preds) {
    if (!HasIndirectPath(groups, p, x)) return p;
  }
  return std::nullopt;
}

void Absorb(std::vector<WorkGroup>& groups, NodeId x, NodeId y) {
  WorkGroup& gx = groups[x];
  WorkGroup& gy = groups[y];
  const bool into_successor = gx.succ.count(y) > 0;
  bool x_feeds_outside = false;
  for (NodeId s : gx.succ) {
    if (s != y) x_feeds_outside = true;
  }
  gy.compute = AddCosts(gy.compute, gx.compute);
  if (into_successor && x_feeds_outside) gy.bytes += gx.bytes;
  gy.originals.insert(gy.originals.end(), gx.originals.begin(),
                      gx.originals.end());
  for (NodeId p : gx.pred) {
    groups[p].succ.erase(x);
    if (p == y) continue;
    groups[p].succ.insert(y);
    gy.pred.insert(p);
  }
  for (NodeId s : gx.succ) {
    groups[s].pred.erase(x);
    if (s == y) continue;
    groups[s].pred.insert(y);
    gy.succ.insert(s);
  }
  gx.alive = false;
  gx.succ.clear();
  gx.pred.clear();
}

}  // namespace

CoarseningResult MergeAndColocate(const ComputationGraph& graph,
                                  int target_size, double cost_threshold) {
  if (target_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "target_size must be >= 1");
  }
  if (!(cost_threshold >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cost_threshold must be >= 0");
  }
  const int n = graph.size();
  std::vector<WorkGroup> groups(n);
  for (NodeId v = 0; v < n; ++v) {
    groups[v].compute = graph.node(v).compute_seconds;
    groups[v].bytes = graph.node(v).output_bytes;
    groups[v].originals = {v};
    groups[v].succ.insert(graph.children(v).begin(), graph.children(v).end());
    groups[v].pred.insert(graph.parents(v).begin(), graph.parents(v).end());
  }

  int alive = n;
  bool merged_any = false;
  while (true) {
    std::vector<NodeId> candidates;
    for (NodeId v = 0; v < n; ++v) {
      if (!groups[v].alive) continue;
      if (alive > target_size || groups[v].bytes < cost_threshold) {
        candidates.push_back(v);
      }
    }
    if (candidates.empty()) break;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](NodeId a, NodeId b) {
                       return groups[a].bytes < groups[b].bytes;
                     });
    bool merged = false;
    for (NodeId x : candidates) {
      if (auto target = ChooseMergeTarget(groups, x)) {
        Absorb(groups, x, *target);
        --alive;
        merged = merged_any = true;
        break;
      }
    }
    if (!merged) break;
  }

  CoarseningResult result;
  if (!merged_any) {
    result.coarse = graph;
    result.colocation.resize(n);
    std::iota(result.colocation.begin(), result.colocation.end(), 0);
    return result;
  }

  std::vector<NodeId> reps;
  for (NodeId v = 0; v < n; ++v) {
    if (!groups[v].alive) continue;
    std::sort(groups[v].originals.begin(), groups[v].originals.end());
    reps.push_back(v);
  }
  std::sort(reps.begin(), reps.end(), [&](NodeId a, NodeId b) {
    return groups[a].originals.front() < groups[b].originals.front();
  });
  std::vector<NodeId> coarse_id(n, -1);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    coarse_id[reps[i]] = static_cast<NodeId>(i);
  }

  result.colocation.assign(n, -1);
  std::vector<OpGroup> nodes;
  std::set<Edge> edges;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const WorkGroup& g = groups[reps[i]];
    OpGroup node;
    node.id = static_cast<NodeId>(i);
    node.compute_seconds = g.compute;
    node.output_bytes = g.bytes;
    if (g.originals.size() == 1) {
      node.members = graph.node(g.originals[0]).members;
    } else {
      for (NodeId o : g.originals) {
        const auto& m = graph.node(o).members;
        if (m.empty()) {
          node.members.push_back(std::to_string(o));
        } else {
          node.members.insert(node.members.end(), m.begin(), m.end());
        }
      }
    }
    for (NodeId o : g.originals) result.colocation[o] = node.id;
    for (NodeId s : g.succ) edges.emplace(node.id, coarse_id[s]);
    nodes.push_back(std::move(node));
  }
  result.coarse = ComputationGraph(graph.name(), std::move(nodes),
                                   {edges.begin(), edges.end()});
  return result;
}

ComputationGraph GraphFromJson(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) throw Error(ErrorCode::kParse, "graph must be an object");
    std::string name = doc.value("name", std::string());
    const auto& jnodes = doc.at("nodes");
    if (!jnodes.is_array()) throw Error(ErrorCode::kParse, "nodes must be an array");

    std::map<long long, OpGroup> by_id;
    for (const auto& jn : jnodes) {
      OpGroup node;
      const long long raw_id = jn.at("id").get<long long>();
      if (raw_id < 0) {
        throw Error(ErrorCode::kParse, "node id must be non-negative");
      }
      const auto& cost = jn.at("cost");
      if (cost.is_array()) {
        node.compute_seconds = cost.get<std::vector<double>>();
      } else {
        node.compute_seconds = {cost.get<double>()};
      }
      node.output_bytes = jn.value("output_bytes", 0.0);
      if (jn.contains("members")) {
        node.members = jn.at("members").get<std::vector<std::string>>();
      }
      if (!by_id.emplace(raw_id, std::move(node)).second) {
        throw Error(ErrorCode::kDuplicateId,
                    "duplicate node id " + std::to_string(raw_id));
      }
    }

    const bool dense = by_id.empty() ||
                       (by_id.begin()->first == 0 &&
                        by_id.rbegin()->first ==
                            static_cast<long long>(by_id.size()) - 1);
    std::map<long long, NodeId> remap;
    std::vector<OpGroup> nodes;
    for (auto& [raw_id, node] : by_id) {
      const NodeId id = static_cast<NodeId>(nodes.size());
      remap[raw_id] = id;
      if (!dense && node.members.empty()) {
        node.members = {std::to_string(raw_id)};
      }
      node.id = id;
      nodes.push_back(std::move(node));
    }

    std::vector<Edge> edges;
    if (doc.contains("edges")) {
      for (const auto& je : doc.at("edges")) {
        if (!je.is_array() || je.size() != 2) {
          throw Error(ErrorCode::kParse, "edge must be a [src, dst] pair");
        }
        const long long u = je[0].get<long long>();
        const long long v = je[1].get<long long>();
        auto iu = remap.find(u);
        auto iv = remap.find(v);
        if (iu == remap.end() || iv == remap.end()) {
          throw Error(ErrorCode::kDanglingEdge,
                      "edge [" + std::to_string(u) + "," + std::to_string(v) +
                          "] references a missing node");
        }
        edges.emplace_back(iu->second, iv->second);
      }
    }
    return ComputationGraph(std::move(name), std::move(nodes), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

nlohmann::json GraphToJson(const ComputationGraph& graph) {
  nlohmann::json doc;
  doc["name"] = graph.name();
  doc["nodes"] = nlohmann::json::array();
  for (const auto& node : graph.nodes()) {
    nlohmann::json jn;
    jn["id"] = node.id;
    if (node.compute_seconds.size() == 1) {
      jn["cost"] = node.compute_seconds[0];
    } else {
      jn["cost"] = node.compute_seconds;
    }
    jn["output_bytes"] = node.output_bytes;
    if (!node.members.empty()) jn["members"] = node.members;
    doc["nodes"].push_back(std::move(jn));
  }
  doc["edges"] = nlohmann::json::array();
  for (const auto& [u, v] : graph.edges()) doc["edges"].push_back({u, v});
  return doc;
}

ComputationGraph LoadGraph(std::string_view text) {
  return GraphFromJson(ParseJson(text));
}

std::string SaveGraph(const ComputationGraph& graph) {
  return DumpJson(GraphToJson(graph));
}

ComputationGraph LoadGraphFile(const std::string& path) {
  return LoadGraph(ReadFile(path));
}

void SaveGraphFile(const ComputationGraph& graph, const std::string& path) {
  WriteFile(path, SaveGraph(graph));
}

}  // namespace placement
