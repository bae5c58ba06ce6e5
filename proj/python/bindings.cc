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
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "placement/baselines.h"
#include "placement/checkpoint.h"
#include "placement/datagen.h"
#include "placement/env.h"
#include "placement/error.h"
#include "placement/graph.h"
#include "placement/io.h"
#include "placement/simulator.h"
#include "placement/topology.h"
#include "placement/trainer.h"

namespace py = pybind11;

namespace placement {
namespace {

// Documents cross the boundary as JSON text; dicts go through the json module.
nlohmann::json ToJson(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return ParseJson(obj.cast<std::string>());
  const auto dumps = py::module_::import("json").attr("dumps");
  return ParseJson(dumps(obj).cast<std::string>());
}

py::object FromJson(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

RewardConfig Reward(const py::object& obj) {
  if (obj.is_none()) return RewardConfig{};
  return RewardConfigFromJson(ToJson(obj));
}

Placement MakePlacement(const ComputationGraph& graph,
                        const DeviceTopology& topology,
                        const std::vector<int>& device) {
  Placement p{device};
  ValidatePlacement(graph, topology, p);
  return p;
}

std::vector<std::shared_ptr<const PlacementEnv>> MakeEnvs(
    const std::vector<ComputationGraph>& graphs, const DeviceTopology& topology,
    const RewardConfig& reward) {
  auto topo = std::make_shared<const DeviceTopology>(topology);
  std::vector<std::shared_ptr<const PlacementEnv>> envs;
  for (const auto& g : graphs) {
    envs.push_back(std::make_shared<const PlacementEnv>(
        std::make_shared<const ComputationGraph>(g), topo, reward));
  }
  return envs;
}

py::dict StatsToDict(const EpochStats& s) {
  py::dict d;
  d["epoch"] = s.epoch;
  d["worker_graphs"] = s.worker_graphs;
  d["worker_runtimes"] = s.worker_runtimes;
  d["worker_returns"] = s.worker_returns;
  d["mean_runtime"] = s.mean_runtime;
  d["mean_entropy"] = s.mean_entropy;
  d["grad_norm"] = s.grad_norm;
  d["lr"] = s.lr;
  d["entropy_weight"] = s.entropy_weight;
  return d;
}

}  // namespace
}  // namespace placement

PYBIND11_MODULE(_core, m) {
  using namespace placement;
  m.doc() = "Device placement simulator, baselines and policy trainer.";

  static py::exception<Error> error(m, "PlacementError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<ComputationGraph>(m, "Graph")
      .def_static("from_json", [](const py::object& doc) {
        return GraphFromJson(ToJson(doc));
      })
      .def_static("load", &LoadGraphFile, py::arg("path"))
      .def("save", [](const ComputationGraph& g, const std::string& path) {
        SaveGraphFile(g, path);
      })
      .def("to_json", [](const ComputationGraph& g) {
        return FromJson(GraphToJson(g));
      })
      .def_property_readonly("name", &ComputationGraph::name)
      .def_property_readonly("edges", [](const ComputationGraph& g) {
        return std::vector<Edge>(g.edges().begin(), g.edges().end());
      })
      .def("__len__", &ComputationGraph::size)
      .def("__repr__", [](const ComputationGraph& g) {
        return "<Graph '" + g.name() + "' nodes=" + std::to_string(g.size()) +
               ">";
      });

  py::class_<DeviceTopology>(m, "Topology")
      .def_static("uniform", &DeviceTopology::Uniform, py::arg("count"),
                  py::arg("memory_bytes"), py::arg("bandwidth_bytes_per_sec"))
      .def_static("from_json", [](const py::object& doc) {
        return TopologyFromJson(ToJson(doc));
      })
      .def_static("load", &LoadTopologyFile, py::arg("path"))
      .def("to_json", [](const DeviceTopology& t) {
        return FromJson(TopologyToJson(t));
      })
      .def("__len__", &DeviceTopology::size);

  m.def(
      "simulate",
      [](const ComputationGraph& g, const DeviceTopology& t,
         const std::vector<int>& placement) {
        const Placement p = MakePlacement(g, t, placement);
        return FromJson(SimulationToJson(Simulate(g, t, p), g));
      },
      py::arg("graph"), py::arg("topology"), py::arg("placement"));

  m.def(
      "penalized_runtime",
      [](const ComputationGraph& g, const DeviceTopology& t,
         const std::vector<int>& placement, const py::object& reward) {
        const RewardConfig cfg = Reward(reward);
        return PenalizedRuntime(Simulate(g, t, MakePlacement(g, t, placement)),
                                cfg);
      },
      py::arg("graph"), py::arg("topology"), py::arg("placement"),
      py::arg("reward") = py::none());

  m.def(
      "place",
      [](const std::string& scheme, const ComputationGraph& g,
         const DeviceTopology& t, std::uint64_t seed, const py::object& reward,
         std::uint64_t budget, int threads) {
        const RewardConfig cfg = Reward(reward);
        py::gil_scoped_release release;
        if (scheme == "single_device") return PlaceSingleDevice(g, t).device;
        if (scheme == "random") return PlaceRandom(g, t, seed).device;
        if (scheme == "mincut") {
          return PlaceBalancedMinCut(g, t, PartitionerConfig{}).placement.device;
        }
        if (scheme == "expert") return PlaceExpertChain(g, t).device;
        if (scheme == "exhaustive") {
          return ExhaustiveSearch(g, t, cfg, budget, threads).placement.device;
        }
        throw Error(ErrorCode::kInvalidArgument, "unknown scheme '" + scheme + "'");
      },
      py::arg("scheme"), py::arg("graph"), py::arg("topology"),
      py::arg("seed") = 0, py::arg("reward") = py::none(),
      py::arg("budget") = kDefaultSearchBudget, py::arg("threads") = 1);

  m.def(
      "exhaustive_search",
      [](const ComputationGraph& g, const DeviceTopology& t,
         const py::object& reward, std::uint64_t budget, int threads) {
        const RewardConfig cfg = Reward(reward);
        SearchResult r;
        {
          py::gil_scoped_release release;
          r = ExhaustiveSearch(g, t, cfg, budget, threads);
        }
        py::dict d;
        d["placement"] = r.placement.device;
        d["runtime"] = r.runtime;
        d["evaluated"] = r.evaluated;
        return d;
      },
      py::arg("graph"), py::arg("topology"), py::arg("reward") = py::none(),
      py::arg("budget") = kDefaultSearchBudget, py::arg("threads") = 1);

  m.def(
      "compare_schemes",
      [](const ComputationGraph& g, const DeviceTopology& t,
         const py::object& reward, std::uint64_t seed, int threads) {
        const RewardConfig cfg = Reward(reward);
        ComparisonOptions options;
        options.seed = seed;
        options.threads = threads;
        std::vector<SchemeResult> results;
        {
          py::gil_scoped_release release;
          results = CompareSchemes(g, t, cfg, options);
        }
        return FromJson(ComparisonToJson(g, results));
      },
      py::arg("graph"), py::arg("topology"), py::arg("reward") = py::none(),
      py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "generate_family",
      [](const py::object& spec) {
        return GenerateFamily(FamilySpec::FromJson(ToJson(spec)));
      },
      py::arg("spec"));

  py::class_<Trainer>(m, "Trainer")
      .def(py::init([](const std::vector<ComputationGraph>& graphs,
                       const DeviceTopology& t, const py::object& policy,
                       const py::object& trainer, const py::object& reward) {
             const PolicyConfig pc = policy.is_none()
                                         ? PolicyConfig{}
                                         : PolicyConfig::FromJson(ToJson(policy));
             const TrainerConfig tc =
                 trainer.is_none() ? TrainerConfig{}
                                   : TrainerConfig::FromJson(ToJson(trainer));
             return std::make_unique<Trainer>(MakeEnvs(graphs, t, Reward(reward)),
                                              pc, tc);
           }),
           py::arg("graphs"), py::arg("topology"), py::arg("policy") = py::none(),
           py::arg("trainer") = py::none(), py::arg("reward") = py::none())
      .def("train_epoch",
           [](Trainer& tr) {
             EpochStats s;
             {
               py::gil_scoped_release release;
               s = tr.TrainEpoch();
             }
             return StatsToDict(s);
           })
      .def("train",
           [](Trainer& tr) {
             py::gil_scoped_release release;
             tr.Train();
           })
      .def_property_readonly("epoch", &Trainer::epoch)
      .def("checkpoint",
           [](const Trainer& tr) {
             return FromJson(CheckpointToJson(tr.MakeCheckpoint()));
           })
      .def("curve_csv",
           [](const Trainer& tr) { return CurveToCsv(tr.curve()); })
      .def("best", [](const Trainer& tr) {
        py::list out;
        for (const auto& b : tr.best()) {
          out.append(py::make_tuple(b.placement.device, b.runtime));
        }
        return out;
      });

  m.def(
      "predict",
      [](const py::object& checkpoint, const ComputationGraph& g,
         const DeviceTopology& t, const py::object& reward, int samples,
         std::uint64_t seed) {
        const Checkpoint ckpt = CheckpointFromJson(ToJson(checkpoint));
        const PlacementEnv env(g, t, Reward(reward));
        Prediction pred;
        {
          py::gil_scoped_release release;
          pred = PredictPlacement(ckpt.params, ckpt.policy, env, samples, seed);
        }
        return py::make_tuple(pred.placement.device, pred.runtime);
      },
      py::arg("checkpoint"), py::arg("graph"), py::arg("topology"),
      py::arg("reward") = py::none(), py::arg("samples") = 0,
      py::arg("seed") = 0);
}
