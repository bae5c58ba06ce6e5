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
#include "placement/topology.h"

#include <cmath>

#include "placement/error.h"
#include "placement/io.h"

namespace placement {

DeviceTopology::DeviceTopology(std::vector<Device> devices,
                               double bandwidth_bytes_per_sec)
    : devices_(std::move(devices)) {
  const std::size_t n = devices_.size();
  bandwidth_.assign(n, std::vector<double>(n, bandwidth_bytes_per_sec));
  uniform_bandwidth_ = true;
  Validate();
}

DeviceTopology::DeviceTopology(
    std::vector<Device> devices,
    std::vector<std::vector<double>> bandwidth_bytes_per_sec)
    : devices_(std::move(devices)), bandwidth_(std::move(bandwidth_bytes_per_sec)) {
  uniform_bandwidth_ = false;
  Validate();
}

DeviceTopology DeviceTopology::Uniform(int count, double memory_bytes,
                                       double bandwidth_bytes_per_sec) {
  std::vector<Device> devices;
  for (int d = 0; d < count; ++d) devices.push_back({d, memory_bytes, 1.0});
  return DeviceTopology(std::move(devices), bandwidth_bytes_per_sec);
}

DeviceTopology DeviceTopology::ScaleBandwidth(double factor) const {
  if (!(factor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bandwidth factor must be > 0");
  }
  DeviceTopology out = *this;
  for (auto& row : out.bandwidth_) {
    for (auto& b : row) b *= factor;
  }
  return out;
}

void DeviceTopology::Validate() const {
  const int n = size();
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "topology has no devices");
  for (int d = 0; d < n; ++d) {
    const Device& dev = devices_[d];
    if (dev.id != d) {
      throw Error(ErrorCode::kInvalidArgument,
                  "device ids must be dense and ordered");
    }
    if (!(dev.memory_bytes > 0.0) || !std::isfinite(dev.memory_bytes)) {
      throw Error(ErrorCode::kInvalidArgument, "memory_bytes must be positive");
    }
    if (!(dev.compute_scale > 0.0) || !std::isfinite(dev.compute_scale)) {
      throw Error(ErrorCode::kInvalidArgument, "compute_scale must be positive");
    }
  }
  if (static_cast<int>(bandwidth_.size()) != n) {
    throw Error(ErrorCode::kShapeMismatch, "bandwidth matrix must be |D|x|D|");
  }
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(bandwidth_[i].size()) != n) {
      throw Error(ErrorCode::kShapeMismatch, "bandwidth matrix must be |D|x|D|");
    }
    for (int j = 0; j < n; ++j) {
      if (i != j && !(bandwidth_[i][j] > 0.0)) {
        throw Error(ErrorCode::kInvalidArgument, "bandwidths must be positive");
      }
    }
  }
}

DeviceTopology TopologyFromJson(const nlohmann::json& doc) {
  try {
    std::vector<Device> devices;
    for (const auto& jd : doc.at("devices")) {
      Device d;
      d.id = jd.at("id").get<int>();
      d.memory_bytes = jd.at("memory_bytes").get<double>();
      d.compute_scale = jd.value("compute_scale", 1.0);
      devices.push_back(d);
    }
    const auto& bw = doc.at("bandwidth_bytes_per_sec");
    if (bw.is_array()) {
      return DeviceTopology(std::move(devices),
                            bw.get<std::vector<std::vector<double>>>());
    }
    return DeviceTopology(std::move(devices), bw.get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

nlohmann::json TopologyToJson(const DeviceTopology& topology) {
  nlohmann::json doc;
  doc["devices"] = nlohmann::json::array();
  for (const auto& d : topology.devices()) {
    doc["devices"].push_back({{"id", d.id},
                              {"memory_bytes", d.memory_bytes},
                              {"compute_scale", d.compute_scale}});
  }
  if (topology.uniform_bandwidth() && topology.size() > 1) {
    doc["bandwidth_bytes_per_sec"] = topology.Bandwidth(0, 1);
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < topology.size(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < topology.size(); ++j) {
        row.push_back(topology.Bandwidth(i, j));
      }
      rows.push_back(std::move(row));
    }
    doc["bandwidth_bytes_per_sec"] = std::move(rows);
  }
  return doc;
}

DeviceTopology LoadTopologyFile(const std::string& path) {
  return TopologyFromJson(ParseJson(ReadFile(path)));
}

void ValidatePlacement(const ComputationGraph& graph,
                       const DeviceTopology& topology,
                       const Placement& placement) {
  if (placement.size() != graph.size()) {
    throw Error(ErrorCode::kDeviceMismatch,
                "placement covers " + std::to_string(placement.size()) +
                    " nodes but the graph has " + std::to_string(graph.size()));
  }
  for (NodeId v = 0; v < graph.size(); ++v) {
    const int d = placement[v];
    if (d < 0 || d >= topology.size()) {
      throw Error(ErrorCode::kDeviceMismatch,
                  "node " + std::to_string(v) + " placed on invalid device " +
                      std::to_string(d));
    }
    const auto entries = graph.node(v).compute_seconds.size();
    if (entries != 1 && static_cast<int>(entries) != topology.size()) {
      throw Error(ErrorCode::kDeviceMismatch,
                  "node " + std::to_string(v) + " has " +
                      std::to_string(entries) + " cost entries for " +
                      std::to_string(topology.size()) + " devices");
    }
  }
}

nlohmann::json PlacementToJson(const ComputationGraph& graph,
                               const Placement& placement) {
  nlohmann::json assignment = nlohmann::json::object();
  for (NodeId v = 0; v < placement.size(); ++v) {
    assignment[std::to_string(v)] = placement[v];
  }
  return {{"graph", graph.name()}, {"assignment", std::move(assignment)}};
}

Placement PlacementFromJson(const nlohmann::json& doc, int num_nodes) {
  try {
    Placement p;
    p.device.assign(num_nodes, -1);
    for (const auto& [key, value] : doc.at("assignment").items()) {
      std::size_t used = 0;
      int v = -1;
      try {
        v = std::stoi(key, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != key.size() || v < 0 || v >= num_nodes) {
        throw Error(ErrorCode::kDeviceMismatch,
                    "placement references unknown node '" + key + "'");
      }
      p.device[v] = value.get<int>();
    }
    for (int v = 0; v < num_nodes; ++v) {
      if (p.device[v] < 0) {
        throw Error(ErrorCode::kDeviceMismatch,
                    "placement does not assign node " + std::to_string(v));
      }
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

Placement LoadPlacementFile(const std::string& path, int num_nodes) {
  return PlacementFromJson(ParseJson(ReadFile(path)), num_nodes);
}

}  // namespace placement
