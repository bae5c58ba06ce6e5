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
#ifndef PLACEMENT_SIMULATOR_H_
#define PLACEMENT_SIMULATOR_H_

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "placement/graph.h"
#include "placement/topology.h"

namespace placement {

struct NodeRecord {
  int device = 0;
  double start = 0.0;
  double end = 0.0;
};

// One shipment of a producer's output tensor to another device.
struct TransferRecord {
  NodeId tensor = 0;  // producing node
  int src = 0;
  int dst = 0;
  double start = 0.0;
  double end = 0.0;
};

struct SimulationResult {
  double makespan_seconds = 0.0;
  std::vector<double> peak_memory_bytes;  // per device
  std::vector<NodeRecord> nodes;          // indexed by node id
  std::vector<TransferRecord> transfers;  // in start order
  std::int64_t event_count = 0;
};

enum class EventKind { kOpDone, kTransferDone, kWakeup };

struct SimEvent {
  EventKind kind = EventKind::kOpDone;
  double timestamp = 0.0;
  std::uint64_t sequence = 0;
  // Node id for kOpDone, transfer index for kTransferDone, device id for
  // kWakeup.
  int payload = 0;
  // kWakeup only: wake the device's bus rather than its compute queue.
  bool bus = false;
};

// Seconds `node` takes on `device`.
double OpDuration(const ComputationGraph& graph, const DeviceTopology& topology,
                  NodeId node, int device);
// Seconds to ship `node`'s output from `src` to `dst` (0 when colocated).
double TransferDuration(const ComputationGraph& graph,
                        const DeviceTopology& topology, NodeId node, int src,
                        int dst);

// Discrete-event execution of a placed graph.
//
// Every device owns an op queue and an outbound transfer queue (its bus); each
// serves one item at a time in arrival order, with items arriving at the same
// instant ordered by node id (and destination device for transfers). An op is
// runnable once every same-device parent has finished and every remote
// parent's tensor has arrived. A tensor is shipped at most once per
// destination device. Free resources are woken through kWakeup events, so
// every completion at time t is applied before anything is dispatched at t.
SimulationResult Simulate(const ComputationGraph& graph,
                          const DeviceTopology& topology,
                          const Placement& placement);

// Independent reference for Simulate's makespan on small graphs. No event
// queue: it repeatedly commits the globally earliest start among every
// device's and bus's next FIFO item, recomputing readiness from scratch.
// Agrees with Simulate exactly when all op and transfer durations are
// positive.
double OracleSimulate(const ComputationGraph& graph,
                      const DeviceTopology& topology,
                      const Placement& placement);

// Per-device peak bytes for a finished timeline. A tensor occupies its
// producer's device from the producer's start, and a destination device from
// the transfer's start; it is released on a device when its last reader there
// (consumer op or outbound transfer) ends. Outputs of sink nodes are never
// released.
std::vector<double> MemoryProfile(const SimulationResult& timeline,
                                  const ComputationGraph& graph,
                                  const Placement& placement, int num_devices);

nlohmann::json SimulationToJson(const SimulationResult& result,
                                const ComputationGraph& graph);

}  // namespace placement

#endif  // PLACEMENT_SIMULATOR_H_
