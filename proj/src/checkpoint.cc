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
#include "placement/checkpoint.h"

#include "placement/error.h"
#include "placement/io.h"

namespace placement {

namespace {

void CheckShapes(const PolicyConfig& cfg, const PolicyParameters& params) {
  Rng rng(0);
  const PolicyParameters expected = PolicyParameters::Init(cfg, rng);
  std::vector<std::vector<std::pair<int, int>>> want, got;
  auto shapes = [](std::vector<std::vector<std::pair<int, int>>>& out) {
    return [&out](const char*, const nn::DenseNet& net) {
      std::vector<std::pair<int, int>> s;
      for (int i = 0; i < net.num_layers(); ++i) {
        s.emplace_back(net.layer(i).out_dim(), net.layer(i).in_dim());
      }
      out.push_back(std::move(s));
    };
  };
  expected.ForEachNet(shapes(want));
  params.ForEachNet(shapes(got));
  if (want != got) {
    throw Error(ErrorCode::kShapeMismatch,
                "checkpoint parameters do not match its policy config");
  }
}

}  // namespace

nlohmann::json CheckpointToJson(const Checkpoint& checkpoint) {
  nlohmann::json doc;
  doc["format"] = kCheckpointFormat;
  doc["policy"] = checkpoint.policy.ToJson();
  doc["parameters"] = checkpoint.params.ToJson();
  if (checkpoint.optimizer) doc["optimizer"] = nn::AdamToJson(*checkpoint.optimizer);
  doc["rng_state"] = checkpoint.rng_state;
  doc["epochs_completed"] = checkpoint.epochs_completed;
  return doc;
}

Checkpoint CheckpointFromJson(const nlohmann::json& doc) {
  try {
    if (doc.value("format", std::string()) != kCheckpointFormat) {
      throw Error(ErrorCode::kParse, "unsupported checkpoint format");
    }
    Checkpoint c;
    c.policy = PolicyConfig::FromJson(doc.at("policy"));
    c.params = PolicyParameters::FromJson(doc.at("parameters"));
    CheckShapes(c.policy, c.params);
    if (doc.contains("optimizer")) {
      c.optimizer = nn::AdamFromJson(doc.at("optimizer"));
      if (c.optimizer->first_moment.size() !=
          static_cast<Eigen::Index>(c.params.ParameterCount())) {
        throw Error(ErrorCode::kShapeMismatch,
                    "optimizer state does not match parameters");
      }
    }
    c.rng_state = doc.value("rng_state", std::string());
    c.epochs_completed = doc.value("epochs_completed", std::int64_t{0});
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::string& path) {
  WriteFile(path, DumpJson(CheckpointToJson(checkpoint)));
}

Checkpoint LoadCheckpoint(const std::string& path) {
  return CheckpointFromJson(ParseJson(ReadFile(path)));
}

}  // namespace placement
