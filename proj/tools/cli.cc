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
#include "cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "placement/baselines.h"
#include "placement/checkpoint.h"
#include "placement/error.h"
#include "placement/graph.h"
#include "placement/io.h"
#include "placement/random.h"
#include "placement/simulator.h"

namespace placement::cli {
namespace {

namespace fs = std::filesystem;

std::string Num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

struct Common {
  std::string topology;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  bool emit_dot = false;
};

void AddCommon(CLI::App* cmd, Common& c, bool dot) {
  cmd->add_option("--topology", c.topology, "Device topology document");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&c](std::uint64_t s) {
        c.seed = s;
        c.seed_set = true;
      },
      "Master seed (default 0)");
  cmd->add_option("--threads", c.threads, "Worker threads (default 1)")
      ->check(CLI::PositiveNumber);
  if (dot) {
    cmd->add_flag("--emit-dot", c.emit_dot,
                  "Also write placement.dot, nodes coloured by device");
  }
}

DeviceTopology RequireTopology(const Common& c) {
  if (c.topology.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--topology is required");
  }
  return LoadTopologyFile(c.topology);
}

void EnsureOut(const std::string& out) {
  if (out.empty()) return;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out + ": " + ec.message());
}

std::string OutPath(const std::string& out, const std::string& name) {
  return (fs::path(out) / name).string();
}

void EchoConfig(const std::string& out, const nlohmann::json& config) {
  if (out.empty()) return;
  EnsureOut(out);
  WriteFile(OutPath(out, "config.json"), DumpJson(config));
}

RewardConfig LoadReward(const std::string& path) {
  if (path.empty()) return {};
  return RewardConfigFromJson(ParseJson(ReadFile(path)));
}

void MaybeDot(const Common& c, const ComputationGraph& g, const Placement& p) {
  if (!c.emit_dot) return;
  if (c.out.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--emit-dot needs --out");
  }
  EnsureOut(c.out);
  WriteFile(OutPath(c.out, "placement.dot"), PlacementToDot(g, p));
}

nlohmann::json CommonJson(const std::string& command, const Common& c) {
  return {{"command", command}, {"topology", c.topology},
          {"out", c.out},        {"seed", c.seed},
          {"threads", c.threads}, {"emit_dot", c.emit_dot}};
}

std::vector<ComputationGraph> SelectMembers(const std::vector<ComputationGraph>& graphs,
                                            const SplitResult& split,
                                            const std::string& which) {
  std::vector<int> idx;
  if (which == "train") {
    idx = split.train;
  } else if (which == "test") {
    idx = split.test;
  } else if (which == "all") {
    idx.resize(graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) idx[i] = static_cast<int>(i);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown split '" + which + "'");
  }
  std::sort(idx.begin(), idx.end());
  std::vector<ComputationGraph> out;
  for (int i : idx) out.push_back(graphs.at(i));
  return out;
}

// ---- datagen

struct DatagenArgs {
  std::string config;
  std::string family;
  int count = 0;
  double train_fraction = 0.0;
};

void RunDatagen(const DatagenArgs& a, const Common& c, std::ostream& out) {
  FamilySpec spec;
  if (!a.config.empty()) spec = FamilySpec::FromJson(ParseJson(ReadFile(a.config)));
  if (!a.family.empty()) spec.family = FamilyFromName(a.family);
  if (a.count > 0) spec.count = a.count;
  if (a.train_fraction > 0.0) spec.train_fraction = a.train_fraction;
  if (c.seed_set) spec.seed = c.seed;
  spec.Validate();
  if (c.out.empty()) throw Error(ErrorCode::kInvalidArgument, "--out is required");
  const Dataset d = MakeDataset(spec);
  WriteDataset(d, c.out);
  nlohmann::json echo = CommonJson("datagen", c);
  echo["spec"] = spec.ToJson();
  EchoConfig(c.out, echo);
  out << "graphs " << d.graphs.size() << " train " << d.split.train.size()
      << " test " << d.split.test.size() << "\n";
}

// ---- simulate

struct SimulateArgs {
  std::string graph;
  std::string placement;
};

void RunSimulate(const SimulateArgs& a, const Common& c, std::ostream& out) {
  const ComputationGraph g = LoadGraphFile(a.graph);
  const DeviceTopology topo = RequireTopology(c);
  const Placement p = LoadPlacementFile(a.placement, g.size());
  const SimulationResult r = Simulate(g, topo, p);
  out << "makespan_s " << Num(r.makespan_seconds) << "\n";
  out << "peak_memory_bytes";
  for (double m : r.peak_memory_bytes) out << " " << Num(m);
  out << "\n";
  if (!c.out.empty()) {
    nlohmann::json echo = CommonJson("simulate", c);
    echo["graph"] = a.graph;
    echo["placement"] = a.placement;
    EchoConfig(c.out, echo);
    WriteFile(OutPath(c.out, "simulation.json"), DumpJson(SimulationToJson(r, g)));
  }
  MaybeDot(c, g, p);
}

// ---- place

struct PlaceArgs {
  std::string scheme;
  std::string graph;
  std::string reward;
  double balance_tolerance = PartitionerConfig{}.balance_tolerance;
  int refinement_passes = PartitionerConfig{}.refinement_passes;
  std::uint64_t budget = kDefaultSearchBudget;
};

void RunPlace(const PlaceArgs& a, const Common& c, std::ostream& out) {
  const ComputationGraph g = LoadGraphFile(a.graph);
  const DeviceTopology topo = RequireTopology(c);
  const RewardConfig reward = LoadReward(a.reward);
  Placement p;
  nlohmann::json extra = nlohmann::json::object();
  if (a.scheme == "single_device") {
    p = PlaceSingleDevice(g, topo);
  } else if (a.scheme == "random") {
    p = PlaceRandom(g, topo, c.seed);
  } else if (a.scheme == "mincut") {
    PartitionerConfig cfg;
    cfg.balance_tolerance = a.balance_tolerance;
    cfg.refinement_passes = a.refinement_passes;
    MinCutResult r = PlaceBalancedMinCut(g, topo, cfg);
    p = r.placement;
    extra["balance_tolerance"] = r.balance_tolerance;
    extra["cut_bytes"] = CutBytes(g, p);
    extra["warnings"] = r.warnings;
  } else if (a.scheme == "expert") {
    p = PlaceExpertChain(g, topo);
  } else if (a.scheme == "exhaustive") {
    SearchResult r = ExhaustiveSearch(g, topo, reward, a.budget, c.threads);
    p = r.placement;
    extra["evaluated"] = r.evaluated;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown scheme '" + a.scheme + "'");
  }
  const SchemeResult s = EvaluateScheme(a.scheme, g, topo, reward, p);
  out << "scheme " << a.scheme << " makespan_s " << Num(s.makespan_seconds)
      << " penalized_runtime_s " << Num(s.penalized_runtime) << "\n";
  if (!c.out.empty()) {
    nlohmann::json echo = CommonJson("place", c);
    echo["scheme"] = a.scheme;
    echo["graph"] = a.graph;
    echo["reward"] = RewardConfigToJson(reward);
    echo["balance_tolerance"] = a.balance_tolerance;
    echo["refinement_passes"] = a.refinement_passes;
    echo["budget"] = a.budget;
    EchoConfig(c.out, echo);
    WriteFile(OutPath(c.out, "placement.json"), DumpJson(PlacementToJson(g, p)));
    nlohmann::json result = ComparisonToJson(g, {s});
    result["details"] = extra;
    WriteFile(OutPath(c.out, "result.json"), DumpJson(result));
  }
  MaybeDot(c, g, p);
}

// ---- train

std::vector<ComputationGraph> TrainingGraphs(const RunConfig& cfg) {
  if (!cfg.dataset.empty()) {
    const Dataset d = LoadDataset(cfg.dataset);
    return SelectMembers(d.graphs, d.split, cfg.split);
  }
  if (cfg.family) {
    const Dataset d = MakeDataset(*cfg.family);
    return SelectMembers(d.graphs, d.split, cfg.split);
  }
  std::vector<ComputationGraph> graphs;
  for (const std::string& path : cfg.graphs) graphs.push_back(LoadGraphFile(path));
  return graphs;
}

DeviceTopology ResolveTopology(const nlohmann::json& t) {
  if (t.is_string()) return LoadTopologyFile(t.get<std::string>());
  return TopologyFromJson(t);
}

void RunTrain(const std::string& config_path, const Common& c,
              std::ostream& out) {
  if (config_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--config is required");
  }
  RunConfig cfg = RunConfig::FromJson(ParseJson(ReadFile(config_path)));
  if (!c.topology.empty()) cfg.topology = c.topology;
  if (!c.out.empty()) cfg.out = c.out;
  if (c.seed_set) cfg.trainer.seed = c.seed;
  if (c.threads > 1) cfg.trainer.threads = c.threads;
  if (cfg.out.empty()) throw Error(ErrorCode::kInvalidArgument, "no output directory");
  if (cfg.topology.is_null()) throw Error(ErrorCode::kInvalidArgument, "no topology");
  cfg.trainer.Validate();

  auto topo = std::make_shared<const DeviceTopology>(ResolveTopology(cfg.topology));
  cfg.policy.num_devices = topo->size();
  std::vector<std::shared_ptr<const PlacementEnv>> envs;
  for (ComputationGraph& g : TrainingGraphs(cfg)) {
    envs.push_back(std::make_shared<PlacementEnv>(
        std::make_shared<const ComputationGraph>(std::move(g)), topo, cfg.reward));
  }
  if (envs.empty()) throw Error(ErrorCode::kInvalidArgument, "no training graphs");

  EnsureOut(cfg.out);
  EchoConfig(cfg.out, cfg.ToJson());
  Trainer trainer(envs, cfg.policy, cfg.trainer);
  trainer.Train();
  SaveCheckpoint(trainer.MakeCheckpoint(), OutPath(cfg.out, "checkpoint.json"));
  WriteFile(OutPath(cfg.out, "curve.csv"), CurveToCsv(trainer.curve()));
  nlohmann::json best = nlohmann::json::array();
  for (std::size_t i = 0; i < envs.size(); ++i) {
    const BestPlacement& b = trainer.best()[i];
    nlohmann::json row = {{"graph", envs[i]->graph().name()}};
    if (b.placement.size() > 0) {
      row["runtime_s"] = b.runtime;
      row["placement"] = PlacementToJson(envs[i]->graph(), b.placement);
    }
    best.push_back(row);
  }
  WriteFile(OutPath(cfg.out, "best.json"), DumpJson(best));
  double last = 0.0;
  if (!trainer.history().empty()) last = trainer.history().back().mean_runtime;
  out << "epochs " << trainer.epoch() << " graphs " << envs.size()
      << " final_mean_runtime_s " << Num(last) << "\n";
}

// ---- evaluate

struct EvaluateArgs {
  std::string checkpoint;
  std::string dataset;
  std::string split = "test";
  std::string reward;
  int samples = 0;
  std::uint64_t budget = kDefaultSearchBudget;
};

void RunEvaluate(const EvaluateArgs& a, const Common& c, std::ostream& out) {
  const Checkpoint ckpt = LoadCheckpoint(a.checkpoint);
  const Dataset d = LoadDataset(a.dataset);
  const auto topo = std::make_shared<const DeviceTopology>(RequireTopology(c));
  const RewardConfig reward = LoadReward(a.reward);
  if (topo->size() != ckpt.policy.num_devices) {
    throw Error(ErrorCode::kDeviceMismatch,
                "checkpoint expects " + std::to_string(ckpt.policy.num_devices) +
                    " devices, topology has " + std::to_string(topo->size()));
  }
  const std::vector<ComputationGraph> graphs =
      SelectMembers(d.graphs, d.split, a.split);

  static const std::vector<std::string> kSchemes = {
      "zero_shot", "random", "single_device", "mincut", "expert", "exhaustive"};
  std::ostringstream csv;
  csv.precision(17);
  csv << "graph,nodes";
  for (const auto& s : kSchemes) csv << "," << s;
  csv << "\n";
  nlohmann::json report = nlohmann::json::array();

  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const ComputationGraph& g = graphs[i];
    const PlacementEnv env(std::make_shared<const ComputationGraph>(g), topo,
                           reward);
    ComparisonOptions opt;
    opt.seed = DeriveSeed(c.seed, i);
    opt.search_budget = a.budget;
    opt.threads = c.threads;
    std::vector<SchemeResult> rows = CompareSchemes(g, *topo, reward, opt);
    const Prediction pred =
        PredictPlacement(ckpt.params, ckpt.policy, env, a.samples, opt.seed);
    rows.insert(rows.begin(),
                EvaluateScheme("zero_shot", g, *topo, reward, pred.placement));
    csv << g.name() << "," << g.size();
    for (const auto& s : kSchemes) {
      csv << ",";
      for (const SchemeResult& r : rows) {
        if (r.scheme == s) csv << r.penalized_runtime;
      }
    }
    csv << "\n";
    report.push_back(ComparisonToJson(g, rows));
  }
  if (!c.out.empty()) {
    nlohmann::json echo = CommonJson("evaluate", c);
    echo["checkpoint"] = a.checkpoint;
    echo["dataset"] = a.dataset;
    echo["split"] = a.split;
    echo["samples"] = a.samples;
    echo["budget"] = a.budget;
    echo["reward"] = RewardConfigToJson(reward);
    EchoConfig(c.out, echo);
    WriteFile(OutPath(c.out, "evaluation.csv"), csv.str());
    WriteFile(OutPath(c.out, "evaluation.json"), DumpJson(report));
  }
  out << csv.str();
}

// ---- oracle

struct OracleArgs {
  std::string graph;
  std::string reward;
  std::uint64_t budget = kDefaultSearchBudget;
};

void RunOracle(const OracleArgs& a, const Common& c, std::ostream& out) {
  const ComputationGraph g = LoadGraphFile(a.graph);
  const DeviceTopology topo = RequireTopology(c);
  const RewardConfig reward = LoadReward(a.reward);
  const SearchResult r = ExhaustiveSearch(g, topo, reward, a.budget, c.threads);
  out << "penalized_runtime_s " << Num(r.runtime) << " evaluated " << r.evaluated
      << "\n";
  out << "placement";
  for (int d : r.placement.device) out << " " << d;
  out << "\n";
  if (!c.out.empty()) {
    nlohmann::json echo = CommonJson("oracle", c);
    echo["graph"] = a.graph;
    echo["budget"] = a.budget;
    echo["reward"] = RewardConfigToJson(reward);
    EchoConfig(c.out, echo);
    nlohmann::json doc = {{"graph", g.name()},
                          {"penalized_runtime_s", r.runtime},
                          {"evaluated", r.evaluated},
                          {"placement", PlacementToJson(g, r.placement)}};
    WriteFile(OutPath(c.out, "oracle.json"), DumpJson(doc));
  }
}

std::string OneLine(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

nlohmann::json RunConfig::ToJson() const {
  nlohmann::json doc = {{"topology", topology},
                        {"split", split},
                        {"reward", RewardConfigToJson(reward)},
                        {"policy", policy.ToJson()},
                        {"trainer", trainer.ToJson()},
                        {"out", out}};
  if (!dataset.empty()) doc["dataset"] = dataset;
  if (family) doc["family"] = family->ToJson();
  if (!graphs.empty()) doc["graphs"] = graphs;
  return doc;
}

RunConfig RunConfig::FromJson(const nlohmann::json& doc) {
  static const std::set<std::string> kKeys = {
      "topology", "dataset", "family", "graphs", "split",
      "reward",   "policy",  "trainer", "out"};
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "run config must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) {
      throw Error(ErrorCode::kParse, "unknown run config key '" + key + "'");
    }
  }
  RunConfig c;
  try {
    if (doc.contains("topology")) c.topology = doc.at("topology");
    c.dataset = doc.value("dataset", std::string());
    if (doc.contains("family")) c.family = FamilySpec::FromJson(doc.at("family"));
    c.graphs = doc.value("graphs", std::vector<std::string>());
    c.split = doc.value("split", c.split);
    if (doc.contains("reward")) c.reward = RewardConfigFromJson(doc.at("reward"));
    if (doc.contains("policy")) c.policy = PolicyConfig::FromJson(doc.at("policy"));
    if (doc.contains("trainer")) {
      c.trainer = TrainerConfig::FromJson(doc.at("trainer"));
    }
    c.out = doc.value("out", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  const int sources =
      !c.dataset.empty() + c.family.has_value() + !c.graphs.empty();
  if (sources != 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "run config needs exactly one of dataset, family, graphs");
  }
  if (!c.topology.is_null() && !c.topology.is_string() && !c.topology.is_object()) {
    throw Error(ErrorCode::kParse, "topology must be a path or an object");
  }
  return c;
}

std::string PlacementToDot(const ComputationGraph& graph,
                           const Placement& placement) {
  static const char* kColors[] = {"#8dd3c7", "#ffffb3", "#bebada", "#fb8072",
                                  "#80b1d3", "#fdb462", "#b3de69", "#fccde5"};
  std::ostringstream s;
  s << "digraph \"" << graph.name() << "\" {\n  node [style=filled];\n";
  for (NodeId v = 0; v < graph.size(); ++v) {
    const int d = placement[v];
    s << "  n" << v << " [label=\"" << v << "\\nd" << d << "\", fillcolor=\""
      << kColors[d % 8] << "\"];\n";
  }
  for (const auto& [u, v] : graph.edges()) s << "  n" << u << " -> n" << v << ";\n";
  s << "}\n";
  return s.str();
}

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Device placement for computation graphs", "placement-opt"};
  app.require_subcommand(1);

  Common common;
  DatagenArgs datagen;
  SimulateArgs simulate;
  PlaceArgs place;
  std::string train_config;
  EvaluateArgs evaluate;
  OracleArgs oracle;

  auto* c_datagen = app.add_subcommand("datagen", "Write a seeded synthetic dataset");
  AddCommon(c_datagen, common, false);
  c_datagen->add_option("--config", datagen.config, "Family spec document");
  c_datagen->add_option("--family", datagen.family,
                        "branch_blocks, encoder_decoder or layered_random");
  c_datagen->add_option("--count", datagen.count, "Number of graphs (default 32)");
  c_datagen->add_option("--train-fraction", datagen.train_fraction,
                        "Training share (default 0.5)");

  auto* c_sim = app.add_subcommand("simulate", "Simulate one placement");
  AddCommon(c_sim, common, true);
  c_sim->add_option("--graph", simulate.graph, "Graph document")->required();
  c_sim->add_option("--placement", simulate.placement, "Placement document")
      ->required();

  auto* c_place = app.add_subcommand("place", "Run a placement scheme");
  AddCommon(c_place, common, true);
  c_place->add_option("--scheme", place.scheme,
                      "single_device, random, mincut, expert or exhaustive")
      ->required();
  c_place->add_option("--graph", place.graph, "Graph document")->required();
  c_place->add_option("--reward", place.reward, "Reward config document");
  c_place->add_option("--balance-tolerance", place.balance_tolerance,
                      "mincut load tolerance (default 0.05)");
  c_place->add_option("--refinement-passes", place.refinement_passes,
                      "mincut refinement passes (default 4)");
  c_place->add_option("--budget", place.budget,
                      "exhaustive placement budget (default 1048576)");

  auto* c_train = app.add_subcommand("train", "Train a policy from a run config");
  AddCommon(c_train, common, false);
  c_train->add_option("--config", train_config, "Run config document")->required();

  auto* c_eval = app.add_subcommand("evaluate", "Compare a checkpoint with baselines");
  AddCommon(c_eval, common, false);
  c_eval->add_option("--checkpoint", evaluate.checkpoint, "Checkpoint")->required();
  c_eval->add_option("--dataset", evaluate.dataset, "Dataset directory")->required();
  c_eval->add_option("--split", evaluate.split, "train, test or all (default test)");
  c_eval->add_option("--samples", evaluate.samples,
                     "Sampled rollouts on top of the greedy one (default 0)");
  c_eval->add_option("--reward", evaluate.reward, "Reward config document");
  c_eval->add_option("--budget", evaluate.budget,
                     "exhaustive placement budget (default 1048576)");

  auto* c_oracle = app.add_subcommand("oracle", "Exhaustive optimum of one graph");
  AddCommon(c_oracle, common, false);
  c_oracle->add_option("--graph", oracle.graph, "Graph document")->required();
  c_oracle->add_option("--reward", oracle.reward, "Reward config document");
  c_oracle->add_option("--budget", oracle.budget,
                       "placement budget (default 1048576)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << OneLine(e.what()) << "\n";
    return 2;
  }

  try {
    if (*c_datagen) RunDatagen(datagen, common, out);
    if (*c_sim) RunSimulate(simulate, common, out);
    if (*c_place) RunPlace(place, common, out);
    if (*c_train) RunTrain(train_config, common, out);
    if (*c_eval) RunEvaluate(evaluate, common, out);
    if (*c_oracle) RunOracle(oracle, common, out);
  } catch (const Error& e) {
    err << "error: " << OneLine(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << OneLine(e.what()) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace placement::cli
