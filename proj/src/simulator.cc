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
#include "placement/simulator.h"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <tuple>

#include "placement/error.h"

namespace placement {

double OpDuration(const ComputationGraph& graph, const DeviceTopology& topology,
                  NodeId node, int device) {
  return graph.node(node).ComputeOn(device) *
         topology.device(device).compute_scale;
}

double TransferDuration(const ComputationGraph& graph,
                        const DeviceTopology& topology, NodeId node, int src,
                        int dst) {
  if (src == dst) return 0.0;
  return graph.node(node).output_bytes / topology.Bandwidth(src, dst);
}

namespace {

struct EventLater {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
    return a.sequence > b.sequence;
  }
};

// FIFO keys: arrival time first, then a stable id.
using OpKey = std::pair<double, NodeId>;
using TransferKey = std::tuple<double, NodeId, int, int>;  // t, tensor, dst, idx

class EventSimulator {
 public:
  EventSimulator(const ComputationGraph& graph, const DeviceTopology& topology,
                 const Placement& placement)
      : graph_(graph),
        topology_(topology),
        placement_(placement),
        num_devices_(topology.size()),
        op_queue_(num_devices_),
        bus_queue_(num_devices_),
        device_busy_(num_devices_, false),
        bus_busy_(num_devices_, false),
        device_wakeup_(num_devices_, false),
        bus_wakeup_(num_devices_, false),
        pending_inputs_(graph.size()),
        shipment_(graph.size(), std::vector<int>(num_devices_, -1)) {}

  SimulationResult Run() {
    const int n = graph_.size();
    result_.nodes.resize(n);
    for (NodeId v = 0; v < n; ++v) {
      result_.nodes[v].device = placement_[v];
      pending_inputs_[v] = static_cast<int>(graph_.parents(v).size());
    }
    for (NodeId v = 0; v < n; ++v) {
      if (pending_inputs_[v] == 0) EnqueueOp(v, 0.0);
    }
    while (!events_.empty()) {
      const SimEvent ev = events_.top();
      events_.pop();
      ++result_.event_count;
      switch (ev.kind) {
        case EventKind::kOpDone: OnOpDone(ev); break;
        case EventKind::kTransferDone: OnTransferDone(ev); break;
        case EventKind::kWakeup: OnWakeup(ev); break;
      }
    }
    double makespan = 0.0;
    for (const auto& rec : result_.nodes) makespan = std::max(makespan, rec.end);
    result_.makespan_seconds = makespan;
    std::stable_sort(result_.transfers.begin(), result_.transfers.end(),
                     [](const TransferRecord& a, const TransferRecord& b) {
                       return a.start < b.start;
                     });
    result_.peak_memory_bytes =
        MemoryProfile(result_, graph_, placement_, num_devices_);
    return std::move(result_);
  }

 private:
  void Push(EventKind kind, double t, int payload, bool bus = false) {
    events_.push(SimEvent{kind, t, next_sequence_++, payload, bus});
  }

  void EnqueueOp(NodeId v, double now) {
    const int d = placement_[v];
    op_queue_[d].emplace(now, v);
    if (!device_busy_[d] && !device_wakeup_[d]) {
      device_wakeup_[d] = true;
      Push(EventKind::kWakeup, now, d, false);
    }
  }

  void EnqueueTransfer(NodeId tensor, int dst, double now) {
    const int src = placement_[tensor];
    const int index = static_cast<int>(result_.transfers.size());
    result_.transfers.push_back({tensor, src, dst, 0.0, 0.0});
    shipment_[tensor][dst] = index;
    bus_queue_[src].emplace(now, tensor, dst, index);
    if (!bus_busy_[src] && !bus_wakeup_[src]) {
      bus_wakeup_[src] = true;
      Push(EventKind::kWakeup, now, src, true);
    }
  }

  void InputArrived(NodeId v, double now) {
    if (--pending_inputs_[v] == 0) EnqueueOp(v, now);
  }

  void OnOpDone(const SimEvent& ev) {
    const NodeId o = ev.payload;
    const int d = placement_[o];
    const double now = ev.timestamp;
    for (NodeId child : graph_.children(o)) {
      const int dc = placement_[child];
      if (dc == d) {
        InputArrived(child, now);
      } else if (shipment_[o][dc] < 0) {
        EnqueueTransfer(o, dc, now);
      }
    }
    device_busy_[d] = false;
    if (!op_queue_[d].empty() && !device_wakeup_[d]) {
      device_wakeup_[d] = true;
      Push(EventKind::kWakeup, now, d, false);
    }
  }

  void OnTransferDone(const SimEvent& ev) {
    const TransferRecord& rec = result_.transfers[ev.payload];
    const double now = ev.timestamp;
    for (NodeId child : graph_.children(rec.tensor)) {
      if (placement_[child] == rec.dst) InputArrived(child, now);
    }
    const int src = rec.src;
    bus_busy_[src] = false;
    if (!bus_queue_[src].empty() && !bus_wakeup_[src]) {
      bus_wakeup_[src] = true;
      Push(EventKind::kWakeup, now, src, true);
    }
  }

  void OnWakeup(const SimEvent& ev) {
    const int d = ev.payload;
    const double now = ev.timestamp;
    if (ev.bus) {
      bus_wakeup_[d] = false;
      if (bus_busy_[d] || bus_queue_[d].empty()) return;
      const auto [ready, tensor, dst, index] = *bus_queue_[d].begin();
      bus_queue_[d].erase(bus_queue_[d].begin());
      bus_busy_[d] = true;
      TransferRecord& rec = result_.transfers[index];
      rec.start = now;
      rec.end = now + TransferDuration(graph_, topology_, tensor, d, dst);
      Push(EventKind::kTransferDone, rec.end, index);
    } else {
      device_wakeup_[d] = false;
      if (device_busy_[d] || op_queue_[d].empty()) return;
      const NodeId v = op_queue_[d].begin()->second;
      op_queue_[d].erase(op_queue_[d].begin());
      device_busy_[d] = true;
      NodeRecord& rec = result_.nodes[v];
      rec.start = now;
      rec.end = now + OpDuration(graph_, topology_, v, d);
      Push(EventKind::kOpDone, rec.end, v);
    }
  }

  const ComputationGraph& graph_;
  const DeviceTopology& topology_;
  const Placement& placement_;
  const int num_devices_;

  std::priority_queue<SimEvent, std::vector<SimEvent>, EventLater> events_;
  std::uint64_t next_sequence_ = 0;
  std::vector<std::set<OpKey>> op_queue_;
  std::vector<std::set<TransferKey>> bus_queue_;
  std::vector<bool> device_busy_;
  std::vector<bool> bus_busy_;
  std::vector<bool> device_wakeup_;
  std::vector<bool> bus_wakeup_;
  std::vector<int> pending_inputs_;
  std::vector<std::vector<int>> shipment_;  // [tensor][dst] -> transfer index
  SimulationResult result_;
};

}  // namespace

SimulationResult Simulate(const ComputationGraph& graph,
                          const DeviceTopology& topology,
                          const Placement& placement) {
  ValidatePlacement(graph, topology, placement);
  return EventSimulator(graph, topology, placement).Run();
}

double OracleSimulate(const ComputationGraph& graph,
                      const DeviceTopology& topology,
                      const Placement& placement) {
  ValidatePlacement(graph, topology, placement);
  const int n = graph.size();
  const int num_devices = topology.size();
  constexpr double kUnknown = -1.0;

  // Needed shipments, one per (tensor, remote consumer device).
  std::set<std::pair<NodeId, int>> needed;
  for (const auto& [u, v] : graph.edges()) {
    if (placement[u] != placement[v]) needed.emplace(u, placement[v]);
  }
  std::map<std::pair<NodeId, int>, double> arrival;  // committed transfers
  std::vector<double> op_end(n, kUnknown);
  std::vector<double> device_free(num_devices, 0.0);
  std::vector<double> bus_free(num_devices, 0.0);

  // Time at which all inputs of v are on its device, or kUnknown.
  auto op_ready = [&](NodeId v) {
    double ready = 0.0;
    for (NodeId p : graph.parents(v)) {
      double t;
      if (placement[p] == placement[v]) {
        t = op_end[p];
      } else {
        auto it = arrival.find({p, placement[v]});
        t = it == arrival.end() ? kUnknown : it->second;
      }
      if (t == kUnknown) return kUnknown;
      ready = std::max(ready, t);
    }
    return ready;
  };

  int committed = 0;
  const int total = n + static_cast<int>(needed.size());
  while (committed < total) {
    bool best_is_op = false;
    double best_start = std::numeric_limits<double>::infinity();
    NodeId best_node = -1;
    int best_dst = -1;

    for (int d = 0; d < num_devices; ++d) {
      // Earliest-arrived runnable op on d, ties to the smaller id.
      double cand_ready = std::numeric_limits<double>::infinity();
      NodeId cand = -1;
      for (NodeId v = 0; v < n; ++v) {
        if (placement[v] != d || op_end[v] != kUnknown) continue;
        const double r = op_ready(v);
        if (r == kUnknown) continue;
        if (r < cand_ready) {
          cand_ready = r;
          cand = v;
        }
      }
      if (cand < 0) continue;
      const double start = std::max(device_free[d], cand_ready);
      if (start < best_start) {
        best_start = start;
        best_is_op = true;
        best_node = cand;
      }
    }
    for (int d = 0; d < num_devices; ++d) {
      double cand_ready = std::numeric_limits<double>::infinity();
      std::pair<NodeId, int> cand{-1, -1};
      for (const auto& item : needed) {
        const auto [tensor, dst] = item;
        if (placement[tensor] != d || arrival.count(item)) continue;
        if (op_end[tensor] == kUnknown) continue;
        // `needed` iterates in (tensor, dst) order, so strict < keeps ties
        // on the smaller key.
        if (op_end[tensor] < cand_ready) {
          cand_ready = op_end[tensor];
          cand = item;
        }
      }
      if (cand.first < 0) continue;
      const double start = std::max(bus_free[d], cand_ready);
      if (start < best_start) {
        best_start = start;
        best_is_op = false;
        best_node = cand.first;
        best_dst = cand.second;
      }
    }
    if (best_node < 0) {
      throw Error(ErrorCode::kInvalidArgument, "oracle made no progress");
    }
    if (best_is_op) {
      const int d = placement[best_node];
      op_end[best_node] = best_start + graph.node(best_node).ComputeOn(d) *
                                           topology.device(d).compute_scale;
      device_free[d] = op_end[best_node];
    } else {
      const int src = placement[best_node];
      const double end = best_start + graph.node(best_node).output_bytes /
                                          topology.Bandwidth(src, best_dst);
      arrival[{best_node, best_dst}] = end;
      bus_free[src] = end;
    }
    ++committed;
  }
  double makespan = 0.0;
  for (double e : op_end) makespan = std::max(makespan, e);
  return makespan;
}

std::vector<double> MemoryProfile(const SimulationResult& timeline,
                                  const ComputationGraph& graph,
                                  const Placement& placement, int num_devices) {
  constexpr double kNever = std::numeric_limits<double>::infinity();
  // (time, +bytes / -bytes) per device.
  std::vector<std::vector<std::pair<double, double>>> deltas(num_devices);
  auto live = [&](int device, double from, double until, double bytes) {
    if (bytes <= 0.0 || !(until > from)) return;
    deltas[device].emplace_back(from, bytes);
    if (until != kNever) deltas[device].emplace_back(until, -bytes);
  };

  std::map<std::pair<NodeId, int>, const TransferRecord*> shipped;
  for (const auto& tr : timeline.transfers) shipped[{tr.tensor, tr.dst}] = &tr;

  for (NodeId v = 0; v < graph.size(); ++v) {
    const int d = placement[v];
    const double bytes = graph.node(v).output_bytes;
    if (graph.IsSink(v)) {
      live(d, timeline.nodes[v].start, kNever, bytes);
      continue;
    }
    double release_home = timeline.nodes[v].start;
    std::map<int, double> release_remote;
    for (NodeId c : graph.children(v)) {
      const int dc = placement[c];
      if (dc == d) {
        release_home = std::max(release_home, timeline.nodes[c].end);
      } else {
        auto& r = release_remote[dc];
        r = std::max(r, timeline.nodes[c].end);
      }
    }
    for (const auto& [dst, release] : release_remote) {
      const TransferRecord* tr = shipped.at({v, dst});
      release_home = std::max(release_home, tr->end);
      live(dst, tr->start, release, bytes);
    }
    live(d, timeline.nodes[v].start, release_home, bytes);
  }

  std::vector<double> peak(num_devices, 0.0);
  for (int d = 0; d < num_devices; ++d) {
    auto& ds = deltas[d];
    std::sort(ds.begin(), ds.end());
    double current = 0.0;
    for (std::size_t i = 0; i < ds.size();) {
      const double t = ds[i].first;
      // Intervals are half-open, so every change at t applies before sampling.
      while (i < ds.size() && ds[i].first == t) current += ds[i++].second;
      peak[d] = std::max(peak[d], current);
    }
  }
  return peak;
}

nlohmann::json SimulationToJson(const SimulationResult& result,
                                const ComputationGraph& graph) {
  nlohmann::json doc;
  doc["graph"] = graph.name();
  doc["makespan_s"] = result.makespan_seconds;
  doc["peak_memory_bytes"] = result.peak_memory_bytes;
  doc["event_count"] = result.event_count;
  doc["nodes"] = nlohmann::json::array();
  for (NodeId v = 0; v < static_cast<int>(result.nodes.size()); ++v) {
    const auto& r = result.nodes[v];
    doc["nodes"].push_back(
        {{"id", v}, {"device", r.device}, {"start", r.start}, {"end", r.end}});
  }
  doc["transfers"] = nlohmann::json::array();
  for (const auto& t : result.transfers) {
    doc["transfers"].push_back({{"tensor", t.tensor},
                                {"src", t.src},
                                {"dst", t.dst},
                                {"bytes", graph.node(t.tensor).output_bytes},
                                {"start", t.start},
                                {"end", t.end}});
  }
  return doc;
}

}  // namespace placement
