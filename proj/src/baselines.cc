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
#include "placement/baselines.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "placement/error.h"
#include "placement/random.h"
#include "placement/simulator.h"
#include "placement/trainer.h"

namespace placement {

namespace {

// Relative slack for floating-point load comparisons.
bool Fits(double load, double bound) {
  return load <= bound * (1.0 + 1e-12) + 1e-15;
}

}  // namespace

Placement PlaceSingleDevice(const ComputationGraph& graph,
                            const DeviceTopology& topology) {
  if (topology.size() < 1) {
    throw Error(ErrorCode::kDeviceMismatch, "topology has no devices");
  }
  return Placement{std::vector<int>(graph.size(), 0)};
}

Placement PlaceRandom(const ComputationGraph& graph,
                      const DeviceTopology& topology, std::uint64_t seed) {
  if (topology.size() < 1) {
    throw Error(ErrorCode::kDeviceMismatch, "topology has no devices");
  }
  Rng rng(seed);
  Placement p;
  p.device.resize(graph.size());
  for (int& d : p.device) d = UniformInt(rng, 0, topology.size() - 1);
  return p;
}

double CutBytes(const ComputationGraph& graph, const Placement& placement) {
  double cut = 0.0;
  for (const auto& [u, v] : graph.edges()) {
    if (placement[u] != placement[v]) cut += graph.node(u).output_bytes;
  }
  return cut;
}

std::vector<double> DeviceLoads(const ComputationGraph& graph,
                                const DeviceTopology& topology,
                                const Placement& placement) {
  std::vector<double> load(topology.size(), 0.0);
  for (NodeId v = 0; v < graph.size(); ++v) {
    load[placement[v]] += OpDuration(graph, topology, v, placement[v]);
  }
  return load;
}

double BalanceBound(const ComputationGraph& graph,
                    const DeviceTopology& topology, double eps) {
  const int D = topology.size();
  double total = 0.0;
  for (NodeId v = 0; v < graph.size(); ++v) {
    double mean = 0.0;
    for (int d = 0; d < D; ++d) mean += OpDuration(graph, topology, v, d);
    total += mean / D;
  }
  return (1.0 + eps) * total / D;
}

MinCutResult PlaceBalancedMinCut(const ComputationGraph& graph,
                                 const DeviceTopology& topology,
                                 const PartitionerConfig& cfg) {
  if (!(cfg.balance_tolerance >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "balance tolerance must be >= 0");
  }
  if (cfg.refinement_passes < 0) {
    throw Error(ErrorCode::kInvalidArgument, "refinement passes must be >= 0");
  }
  ValidatePlacement(graph, topology, PlaceSingleDevice(graph, topology));
  const int n = graph.size();
  const int D = topology.size();
  const std::vector<NodeId> order = TopologicalOrder(graph);

  MinCutResult result;
  double eps = cfg.balance_tolerance;
  // Past this tolerance the bound no longer binds anything useful.
  const double eps_cap = 64.0 * D;
  Placement p;
  std::vector<double> load;
  double bound = 0.0;
  for (;;) {
    bound = eps > eps_cap ? std::numeric_limits<double>::infinity()
                          : BalanceBound(graph, topology, eps);
    p.device.assign(n, -1);
    load.assign(D, 0.0);
    bool feasible = true;
    for (NodeId v : order) {
      int best = -1;
      double best_cut = 0.0;
      for (int d = 0; d < D; ++d) {
        const double dur = OpDuration(graph, topology, v, d);
        if (!Fits(load[d] + dur, bound)) continue;
        double added = 0.0;
        for (NodeId u : graph.parents(v)) {
          if (p[u] != d) added += graph.node(u).output_bytes;
        }
        if (best < 0 || added < best_cut ||
            (added == best_cut && load[d] < load[best])) {
          best = d;
          best_cut = added;
        }
      }
      if (best < 0) {
        feasible = false;
        break;
      }
      p.device[v] = best;
      load[best] += OpDuration(graph, topology, v, best);
    }
    if (feasible) break;
    const double relaxed = std::max(2.0 * eps, 1.0 / std::max(n, 1));
    std::ostringstream msg;
    msg << "balance tolerance " << eps << " infeasible, relaxed to " << relaxed;
    result.warnings.push_back(msg.str());
    eps = relaxed;
  }
  result.balance_tolerance = eps;
  result.cut_history.push_back(CutBytes(graph, p));

  for (int pass = 0; pass < cfg.refinement_passes; ++pass) {
    bool moved = false;
    for (NodeId v = 0; v < n; ++v) {
      const int cur = p[v];
      int best = -1;
      double best_delta = 0.0;
      for (int d = 0; d < D; ++d) {
        if (d == cur) continue;
        if (!Fits(load[d] + OpDuration(graph, topology, v, d), bound)) continue;
        double delta = 0.0;
        for (NodeId u : graph.parents(v)) {
          const double b = graph.node(u).output_bytes;
          delta += b * ((p[u] != d) - (p[u] != cur));
        }
        const double b = graph.node(v).output_bytes;
        for (NodeId w : graph.children(v)) {
          delta += b * ((p[w] != d) - (p[w] != cur));
        }
        if (delta < best_delta) {
          best = d;
          best_delta = delta;
        }
      }
      if (best >= 0) {
        load[cur] -= OpDuration(graph, topology, v, cur);
        load[best] += OpDuration(graph, topology, v, best);
        p.device[v] = best;
        moved = true;
      }
    }
    result.cut_history.push_back(CutBytes(graph, p));
    if (!moved) break;
  }
  result.placement = std::move(p);
  return result;
}

Placement PlaceExpertChain(const ComputationGraph& graph,
                           const DeviceTopology& topology) {
  const int D = topology.size();
  if (D < 1) throw Error(ErrorCode::kDeviceMismatch, "topology has no devices");
  const std::vector<int> depth = TopologicalDepth(graph);
  const int bands =
      depth.empty() ? 0 : *std::max_element(depth.begin(), depth.end()) + 1;
  std::vector<double> band_cost(bands, 0.0);
  for (NodeId v = 0; v < graph.size(); ++v) {
    band_cost[depth[v]] += graph.node(v).ComputeOn(0);
  }
  double total = 0.0;
  for (double c : band_cost) total += c;
  std::vector<int> band_device(bands, 0);
  if (total > 0.0) {
    double start = 0.0;
    for (int b = 0; b < bands; ++b) {
      const double mid = start + 0.5 * band_cost[b];
      band_device[b] =
          std::clamp(static_cast<int>(std::floor(mid * D / total)), 0, D - 1);
      start += band_cost[b];
    }
  }
  Placement p;
  p.device.resize(graph.size());
  for (NodeId v = 0; v < graph.size(); ++v) p.device[v] = band_device[depth[v]];
  return p;
}

SearchResult ExhaustiveSearch(const ComputationGraph& graph,
                              const DeviceTopology& topology,
                              const RewardConfig& reward, std::uint64_t budget,
                              int threads) {
  ValidateRewardConfig(reward);
  const int n = graph.size();
  const std::uint64_t D = topology.size();
  if (D < 1) throw Error(ErrorCode::kDeviceMismatch, "topology has no devices");
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > budget / D) {
      throw Error(ErrorCode::kBudgetExceeded,
                  std::to_string(D) + "^" + std::to_string(n) +
                      " placements exceed the search budget of " +
                      std::to_string(budget));
    }
    total *= D;
  }
  ValidatePlacement(graph, topology, PlaceSingleDevice(graph, topology));

  const int chunks = std::max(1, std::min<int>(threads, static_cast<int>(
                                                            std::min<std::uint64_t>(total, 1024))));
  std::vector<SearchResult> partial(chunks);
  ParallelFor(chunks, threads, [&](int c) {
    const std::uint64_t lo = total * c / chunks;
    const std::uint64_t hi = total * (c + 1) / chunks;
    SearchResult best;
    best.runtime = std::numeric_limits<double>::infinity();
    Placement p;
    p.device.assign(n, 0);
    for (std::uint64_t k = lo; k < hi; ++k) {
      // Node 0 is the most significant digit, so k order is lexicographic.
      std::uint64_t x = k;
      for (int i = n - 1; i >= 0; --i) {
        p.device[i] = static_cast<int>(x % D);
        x /= D;
      }
      const double r = PenalizedRuntime(Simulate(graph, topology, p), reward);
      ++best.evaluated;
      if (r < best.runtime) {
        best.runtime = r;
        best.placement = p;
      }
    }
    partial[c] = std::move(best);
  });
  SearchResult out = partial[0];
  out.evaluated = 0;
  for (const SearchResult& s : partial) {
    out.evaluated += s.evaluated;
    if (s.runtime < out.runtime) {
      out.runtime = s.runtime;
      out.placement = s.placement;
    }
  }
  return out;
}

SchemeResult EvaluateScheme(const std::string& scheme,
                            const ComputationGraph& graph,
                            const DeviceTopology& topology,
                            const RewardConfig& reward,
                            const Placement& placement) {
  const SimulationResult sim = Simulate(graph, topology, placement);
  SchemeResult r;
  r.scheme = scheme;
  r.placement = placement;
  r.makespan_seconds = sim.makespan_seconds;
  for (double m : sim.peak_memory_bytes) {
    r.peak_memory_bytes = std::max(r.peak_memory_bytes, m);
  }
  r.penalized_runtime = PenalizedRuntime(sim, reward);
  return r;
}

std::vector<SchemeResult> CompareSchemes(const ComputationGraph& graph,
                                         const DeviceTopology& topology,
                                         const RewardConfig& reward,
                                         const ComparisonOptions& options) {
  std::vector<SchemeResult> out;
  out.push_back(EvaluateScheme("single_device", graph, topology, reward,
                               PlaceSingleDevice(graph, topology)));
  out.push_back(EvaluateScheme("random", graph, topology, reward,
                               PlaceRandom(graph, topology, options.seed)));
  out.push_back(EvaluateScheme(
      "mincut", graph, topology, reward,
      PlaceBalancedMinCut(graph, topology, options.partitioner).placement));
  out.push_back(EvaluateScheme("expert", graph, topology, reward,
                               PlaceExpertChain(graph, topology)));
  try {
    const SearchResult s = ExhaustiveSearch(graph, topology, reward,
                                            options.search_budget, options.threads);
    out.push_back(
        EvaluateScheme("exhaustive", graph, topology, reward, s.placement));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kBudgetExceeded) throw;
  }
  return out;
}

nlohmann::json ComparisonToJson(const ComputationGraph& graph,
                                const std::vector<SchemeResult>& results) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SchemeResult& r : results) {
    rows.push_back({{"scheme", r.scheme},
                    {"makespan_s", r.makespan_seconds},
                    {"peak_memory_bytes", r.peak_memory_bytes},
                    {"penalized_runtime_s", r.penalized_runtime},
                    {"placement", r.placement.device}});
  }
  return {{"graph", graph.name()}, {"schemes", rows}};
}

std::string ComparisonToCsv(const ComputationGraph& graph,
                            const std::vector<SchemeResult>& results,
                            bool header) {
  std::ostringstream os;
  if (header) {
    os << "graph,scheme,makespan_s,peak_memory_bytes,penalized_runtime_s\n";
  }
  os << std::setprecision(17);
  for (const SchemeResult& r : results) {
    os << graph.name() << ',' << r.scheme << ',' << r.makespan_seconds << ','
       << r.peak_memory_bytes << ',' << r.penalized_runtime << '\n';
  }
  return os.str();
}

}  // namespace placement
