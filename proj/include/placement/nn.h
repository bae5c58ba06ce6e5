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
#ifndef PLACEMENT_NN_H_
#define PLACEMENT_NN_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "placement/random.h"

namespace placement::nn {

enum class Activation { kRelu, kIdentity };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kIdentity;

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
};

// Cached activations of one forward call.
struct DenseTape {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
};

// Stack of affine layers. Inputs are batched column-wise: a (in x n) matrix
// maps to an (out x n) matrix.
class DenseNet {
 public:
  DenseNet() = default;
  // dims = {in, hidden..., out}; one activation per layer. Zero parameters.
  DenseNet(const std::vector<int>& dims, const std::vector<Activation>& acts);

  // Glorot-uniform weights, zero biases.
  static DenseNet Init(const std::vector<int>& dims,
                       const std::vector<Activation>& acts, Rng& rng);

  int in_dim() const;
  int out_dim() const;
  int num_layers() const { return static_cast<int>(layers_.size()); }
  const DenseLayer& layer(int i) const { return layers_.at(i); }
  DenseLayer& layer(int i) { return layers_.at(i); }

  // Throws Error(kShapeMismatch) on a wrong input height.
  Eigen::MatrixXd Forward(const Eigen::MatrixXd& input,
                          DenseTape* tape = nullptr) const;
  Eigen::VectorXd Forward(const Eigen::VectorXd& input,
                          DenseTape* tape = nullptr) const;

  // Accumulates parameter gradients into `grads` (same shape as *this) and
  // returns the gradient with respect to the input.
  Eigen::MatrixXd Backward(const DenseTape& tape,
                           const Eigen::MatrixXd& grad_output,
                           DenseNet& grads) const;

  DenseNet ZerosLike() const;
  std::size_t ParameterCount() const;

  // Visits weight then bias buffers, layer by layer.
  void VisitBuffers(const std::function<void(double*, std::size_t)>& fn);
  void VisitBuffers(
      const std::function<void(const double*, std::size_t)>& fn) const;

  nlohmann::json ToJson() const;
  static DenseNet FromJson(const nlohmann::json& doc);

 private:
  std::vector<DenseLayer> layers_;
};

struct Categorical {
  Eigen::VectorXd probs;
  Eigen::VectorXd log_probs;
  double entropy = 0.0;
};

// Max-subtracted softmax. Throws Error(kInvalidArgument) on NaN logits.
Categorical Softmax(const Eigen::VectorXd& logits);

// Inverse-CDF draw using one uniform variate.
int SampleIndex(const Eigen::VectorXd& probs, Rng& rng);

// Index of the largest probability; ties go to the smallest index.
int ArgMax(const Eigen::VectorXd& probs);

struct SampledAction {
  int action = 0;
  double log_prob = 0.0;
  Categorical dist;
};

SampledAction SoftmaxSample(const Eigen::VectorXd& logits, Rng& rng);

// d/dlogits of  -log p(action) * advantage - entropy_weight * H(p).
Eigen::VectorXd PolicyLossLogitGradient(const Categorical& dist, int action,
                                        double advantage,
                                        double entropy_weight);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, Eigen::Index num_params);
};

// Bias-corrected Adam step with learning rate config.learning_rate * lr_scale.
// Descends along `grads`.
void AdamStep(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
              AdamState& state, double lr_scale = 1.0);

nlohmann::json AdamToJson(const AdamState& state);
AdamState AdamFromJson(const nlohmann::json& doc);

struct GradientCheck {
  double max_relative_error = 0.0;
  int worst_index = -1;
  int checked = 0;
  // Coordinates whose one-sided slopes disagree, i.e. a ReLU kink lies within
  // h of the evaluation point.
  int skipped_kinks = 0;
};

// Central differences against `analytic`, error |a-b| / max(|a|,|b|,1e-8).
// With `max_coords`, checks a seeded random subset of coordinates.
GradientCheck FiniteDifferenceCheck(
    const std::function<double(const Eigen::VectorXd&)>& loss,
    const Eigen::VectorXd& params, const Eigen::VectorXd& analytic,
    double h = 1e-5, std::optional<int> max_coords = {},
    std::uint64_t seed = 0);

}  // namespace placement::nn

#endif  // PLACEMENT_NN_H_
