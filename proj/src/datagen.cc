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
#include "placement/datagen.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>

#include "placement/error.h"
#include "placement/io.h"
#include "placement/random.h"

namespace placement {

namespace {

void CheckRange(const IntRange& r, int min_lo, const char* name) {
  if (r.lo < min_lo || r.lo > r.hi) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("invalid range for ") + name);
  }
}

nlohmann::json RangeJson(const IntRange& r) { return {r.lo, r.hi}; }
nlohmann::json RangeJson(const RealRange& r) { return {r.lo, r.hi}; }

class Builder {
 public:
  Builder(const FamilySpec& spec, Rng& rng) : spec_(spec), rng_(rng) {}

  NodeId Add() {
    OpGroup g;
    g.id = static_cast<NodeId>(nodes_.size());
    g.compute_seconds = {
        UniformReal(rng_, spec_.compute_seconds.lo, spec_.compute_seconds.hi)};
    g.output_bytes = std::round(
        UniformReal(rng_, spec_.output_bytes.lo, spec_.output_bytes.hi));
    nodes_.push_back(std::move(g));
    return nodes_.back().id;
  }

  void Connect(NodeId u, NodeId v) { edges_.emplace_back(u, v); }

  ComputationGraph Build(std::string name) {
    return ComputationGraph(std::move(name), std::move(nodes_),
                            std::move(edges_));
  }

 private:
  const FamilySpec& spec_;
  Rng& rng_;
  std::vector<OpGroup> nodes_;
  std::vector<Edge> edges_;
};

int Draw(Rng& rng, const IntRange& r) { return UniformInt(rng, r.lo, r.hi); }

ComputationGraph BranchBlocks(const FamilySpec& spec, Rng& rng,
                              std::string name) {
  Builder b(spec, rng);
  NodeId head = b.Add();
  for (int block = 0; block < spec.blocks; ++block) {
    const int branches = Draw(rng, spec.branches);
    std::vector<NodeId> tails;
    for (int k = 0; k < branches; ++k) {
      const int ops = Draw(rng, spec.ops_per_branch);
      NodeId prev = head;
      for (int i = 0; i < ops; ++i) {
        const NodeId v = b.Add();
        b.Connect(prev, v);
        prev = v;
      }
      tails.push_back(prev);
    }
    const NodeId join = b.Add();
    for (NodeId t : tails) b.Connect(t, join);
    head = join;
  }
  return b.Build(std::move(name));
}

ComputationGraph EncoderDecoder(const FamilySpec& spec, Rng& rng,
                                std::string name) {
  const int L = Draw(rng, spec.layers);
  const int T = Draw(rng, spec.steps);
  Builder b(spec, rng);
  for (int i = 0; i < 2 * L * T + T; ++i) b.Add();
  auto enc = [&](int l, int t) { return l * T + t; };
  auto dec = [&](int l, int t) { return L * T + l * T + t; };
  auto attn = [&](int t) { return 2 * L * T + t; };
  for (int l = 0; l < L; ++l) {
    for (int t = 0; t < T; ++t) {
      if (t + 1 < T) {
        b.Connect(enc(l, t), enc(l, t + 1));
        b.Connect(dec(l, t), dec(l, t + 1));
      }
      if (l + 1 < L) {
        b.Connect(enc(l, t), enc(l + 1, t));
        b.Connect(dec(l, t), dec(l + 1, t));
      }
    }
    b.Connect(enc(l, T - 1), dec(l, 0));
  }
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < T; ++s) b.Connect(enc(L - 1, s), attn(t));
    b.Connect(dec(L - 1, t), attn(t));
    if (t + 1 < T) b.Connect(attn(t), dec(0, t + 1));
  }
  return b.Build(std::move(name));
}

ComputationGraph LayeredRandom(const FamilySpec& spec, Rng& rng,
                               std::string name) {
  const int L = Draw(rng, spec.layers);
  Builder b(spec, rng);
  std::vector<NodeId> prev;
  for (int l = 0; l < L; ++l) {
    const int w = Draw(rng, spec.width);
    std::vector<NodeId> layer;
    for (int i = 0; i < w; ++i) {
      const NodeId v = b.Add();
      if (!prev.empty()) {
        const std::size_t must = UniformIndex(rng, prev.size());
        for (std::size_t j = 0; j < prev.size(); ++j) {
          const double u = Uniform01(rng);
          if (j == must || u < spec.edge_probability) b.Connect(prev[j], v);
        }
      }
      layer.push_back(v);
    }
    prev = std::move(layer);
  }
  return b.Build(std::move(name));
}

}  // namespace

std::string FamilyName(Family family) {
  switch (family) {
    case Family::kBranchBlocks:
      return "branch_blocks";
    case Family::kEncoderDecoder:
      return "encoder_decoder";
    case Family::kLayeredRandom:
      return "layered_random";
  }
  return "unknown";
}

Family FamilyFromName(const std::string& name) {
  for (Family f : {Family::kBranchBlocks, Family::kEncoderDecoder,
                   Family::kLayeredRandom}) {
    if (FamilyName(f) == name) return f;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown family '" + name + "'");
}

void FamilySpec::Validate() const {
  auto bad = [](const std::string& m) {
    throw Error(ErrorCode::kInvalidArgument, m);
  };
  if (count < 2) bad("count must be >= 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    bad("train_fraction must be in (0, 1)");
  }
  if (blocks < 1) bad("blocks must be >= 1");
  CheckRange(branches, 1, "branches");
  CheckRange(ops_per_branch, 1, "ops_per_branch");
  CheckRange(layers, 1, "layers");
  CheckRange(steps, 1, "steps");
  CheckRange(width, 1, "width");
  if (!(edge_probability >= 0.0 && edge_probability <= 1.0)) {
    bad("edge_probability must be in [0, 1]");
  }
  if (!(compute_seconds.lo >= 0.0 && compute_seconds.lo <= compute_seconds.hi &&
        std::isfinite(compute_seconds.hi))) {
    bad("invalid compute_seconds range");
  }
  if (!(output_bytes.lo >= 0.0 && output_bytes.lo <= output_bytes.hi &&
        std::isfinite(output_bytes.hi))) {
    bad("invalid output_bytes range");
  }
}

nlohmann::json FamilySpec::ToJson() const {
  return {{"family", FamilyName(family)},
          {"count", count},
          {"train_fraction", train_fraction},
          {"blocks", blocks},
          {"branches", RangeJson(branches)},
          {"ops_per_branch", RangeJson(ops_per_branch)},
          {"layers", RangeJson(layers)},
          {"steps", RangeJson(steps)},
          {"width", RangeJson(width)},
          {"edge_probability", edge_probability},
          {"compute_seconds", RangeJson(compute_seconds)},
          {"output_bytes", RangeJson(output_bytes)},
          {"seed", seed}};
}

FamilySpec FamilySpec::FromJson(const nlohmann::json& doc) {
  static const std::set<std::string> kKeys = {
      "family", "count",  "train_fraction", "blocks",
      "branches", "ops_per_branch", "layers", "steps",
      "width", "edge_probability", "compute_seconds", "output_bytes", "seed"};
  if (!doc.is_object()) {
    throw Error(ErrorCode::kParse, "family spec must be an object");
  }
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) {
      throw Error(ErrorCode::kParse, "unknown family spec key '" + key + "'");
    }
  }
  FamilySpec s;
  try {
    auto irange = [&](const char* key, IntRange& r) {
      if (!doc.contains(key)) return;
      const auto& a = doc.at(key);
      if (a.is_number_integer()) {
        r.lo = r.hi = a.get<int>();
      } else {
        r.lo = a.at(0).get<int>();
        r.hi = a.at(1).get<int>();
      }
    };
    auto rrange = [&](const char* key, RealRange& r) {
      if (!doc.contains(key)) return;
      const auto& a = doc.at(key);
      if (a.is_number()) {
        r.lo = r.hi = a.get<double>();
      } else {
        r.lo = a.at(0).get<double>();
        r.hi = a.at(1).get<double>();
      }
    };
    if (doc.contains("family")) {
      s.family = FamilyFromName(doc.at("family").get<std::string>());
    }
    s.count = doc.value("count", s.count);
    s.train_fraction = doc.value("train_fraction", s.train_fraction);
    s.blocks = doc.value("blocks", s.blocks);
    irange("branches", s.branches);
    irange("ops_per_branch", s.ops_per_branch);
    irange("layers", s.layers);
    irange("steps", s.steps);
    irange("width", s.width);
    s.edge_probability = doc.value("edge_probability", s.edge_probability);
    rrange("compute_seconds", s.compute_seconds);
    rrange("output_bytes", s.output_bytes);
    s.seed = doc.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  s.Validate();
  return s;
}

ComputationGraph GenerateGraph(const FamilySpec& spec, int index) {
  Rng rng(DeriveSeed(spec.seed, static_cast<std::uint64_t>(index)));
  std::string name = FamilyName(spec.family) + "_" + std::to_string(index);
  switch (spec.family) {
    case Family::kBranchBlocks:
      return BranchBlocks(spec, rng, std::move(name));
    case Family::kEncoderDecoder:
      return EncoderDecoder(spec, rng, std::move(name));
    case Family::kLayeredRandom:
      return LayeredRandom(spec, rng, std::move(name));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown family");
}

std::vector<ComputationGraph> GenerateFamily(const FamilySpec& spec) {
  spec.Validate();
  std::vector<ComputationGraph> out;
  out.reserve(spec.count);
  for (int i = 0; i < spec.count; ++i) out.push_back(GenerateGraph(spec, i));
  return out;
}

SplitResult Split(int count, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "split fraction must be in (0, 1)");
  }
  if (count < 0) throw Error(ErrorCode::kInvalidArgument, "negative count");
  std::vector<int> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int i = count - 1; i > 0; --i) {
    std::swap(idx[i], idx[UniformIndex(rng, i + 1)]);
  }
  const int n_train =
      std::min(count, static_cast<int>(std::ceil(fraction * count - 1e-9)));
  SplitResult s;
  s.train.assign(idx.begin(), idx.begin() + n_train);
  s.test.assign(idx.begin() + n_train, idx.end());
  return s;
}

Dataset MakeDataset(const FamilySpec& spec) {
  Dataset d;
  d.spec = spec;
  d.graphs = GenerateFamily(spec);
  d.split = Split(spec.count, spec.train_fraction,
                  DeriveSeed(spec.seed, 0x73706c6974ull));
  return d;
}

void WriteDataset(const Dataset& dataset, const std::string& dir) {
  namespace fs = std::filesystem;
  nlohmann::json manifest;
  manifest["spec"] = dataset.spec.ToJson();
  manifest["seed"] = dataset.spec.seed;
  nlohmann::json members = nlohmann::json::array();
  for (const ComputationGraph& g : dataset.graphs) {
    const std::string rel = "graphs/" + g.name() + ".json";
    SaveGraphFile(g, (fs::path(dir) / rel).string());
    members.push_back({{"name", g.name()}, {"file", rel}, {"nodes", g.size()}});
  }
  manifest["members"] = members;
  auto names = [&](const std::vector<int>& idx) {
    nlohmann::json a = nlohmann::json::array();
    for (int i : idx) a.push_back(dataset.graphs.at(i).name());
    return a;
  };
  manifest["train"] = names(dataset.split.train);
  manifest["test"] = names(dataset.split.test);
  WriteFile((fs::path(dir) / "manifest.json").string(), DumpJson(manifest));
}

Dataset LoadDataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const nlohmann::json manifest =
      ParseJson(ReadFile((fs::path(dir) / "manifest.json").string()));
  Dataset d;
  try {
    d.spec = FamilySpec::FromJson(manifest.at("spec"));
    std::map<std::string, int> index;
    for (const auto& m : manifest.at("members")) {
      const std::string name = m.at("name").get<std::string>();
      index[name] = static_cast<int>(d.graphs.size());
      d.graphs.push_back(
          LoadGraphFile((fs::path(dir) / m.at("file").get<std::string>()).string()));
    }
    auto lookup = [&](const nlohmann::json& names) {
      std::vector<int> out;
      for (const auto& n : names) {
        auto it = index.find(n.get<std::string>());
        if (it == index.end()) {
          throw Error(ErrorCode::kParse,
                      "split references unknown graph '" +
                          n.get<std::string>() + "'");
        }
        out.push_back(it->second);
      }
      return out;
    };
    d.split.train = lookup(manifest.at("train"));
    d.split.test = lookup(manifest.at("test"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  return d;
}

}  // namespace placement
