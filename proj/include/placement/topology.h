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
#ifndef PLACEMENT_TOPOLOGY_H_
#define PLACEMENT_TOPOLOGY_H_

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "placement/graph.h"

namespace placement {

struct Device {
  int id = 0;
  double memory_bytes = 0.0;
  // Multiplier applied to an op group's compute seconds on this device.
  double compute_scale = 1.0;

  bool operator==(const Device&) const = default;
};

class DeviceTopology {
 public:
  DeviceTopology() = default;
  // Same bandwidth between every ordered pair of distinct devices.
  DeviceTopology(std::vector<Device> devices, double bandwidth_bytes_per_sec);
  // Full matrix; the diagonal is ignored.
  DeviceTopology(std::vector<Device> devices,
                 std::vector<std::vector<double>> bandwidth_bytes_per_sec);

  // `count` identical devices.
  static DeviceTopology Uniform(int count, double memory_bytes,
                                double bandwidth_bytes_per_sec);

  int size() const { return static_cast<int>(devices_.size()); }
  const Device& device(int d) const { return devices_.at(d); }
  const std::vector<Device>& devices() const { return devices_; }
  double Bandwidth(int src, int dst) const { return bandwidth_.at(src).at(dst); }
  bool uniform_bandwidth() const { return uniform_bandwidth_; }

  // Copy with every bandwidth multiplied by `factor` (> 0).
  DeviceTopology ScaleBandwidth(double factor) const;

  bool operator==(const DeviceTopology&) const = default;

 private:
  void Validate() const;

  std::vector<Device> devices_;
  std::vector<std::vector<double>> bandwidth_;
  bool uniform_bandwidth_ = true;
};

DeviceTopology TopologyFromJson(const nlohmann::json& doc);
nlohmann::json TopologyToJson(const DeviceTopology& topology);
DeviceTopology LoadTopologyFile(const std::string& path);

// Total node -> device assignment.
struct Placement {
  std::vector<int> device;

  int size() const { return static_cast<int>(device.size()); }
  int operator[](NodeId v) const { return device[v]; }
  bool operator==(const Placement&) const = default;
  auto operator<=>(const Placement&) const = default;
};

// Throws Error(kDeviceMismatch) unless every node maps to a valid device and
// every cost vector broadcasts against the topology.
void ValidatePlacement(const ComputationGraph& graph,
                       const DeviceTopology& topology,
                       const Placement& placement);

nlohmann::json PlacementToJson(const ComputationGraph& graph,
                               const Placement& placement);
Placement PlacementFromJson(const nlohmann::json& doc, int num_nodes);
Placement LoadPlacementFile(const std::string& path, int num_nodes);

}  // namespace placement

#endif  // PLACEMENT_TOPOLOGY_H_
