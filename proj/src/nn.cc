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
#include "placement/nn.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "placement/error.h"

namespace placement::nn {

namespace {

const char* ActivationName(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

Activation ActivationFromName(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw Error(ErrorCode::kParse, "unknown activation '" + name + "'");
}

}  // namespace

DenseNet::DenseNet(const std::vector<int>& dims,
                   const std::vector<Activation>& acts) {
  if (dims.size() < 2 || acts.size() + 1 != dims.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "DenseNet needs one activation per layer");
  }
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] <= 0 || dims[i + 1] <= 0) {
      throw Error(ErrorCode::kShapeMismatch, "layer dimensions must be positive");
    }
    DenseLayer layer;
    layer.weight = Eigen::MatrixXd::Zero(dims[i + 1], dims[i]);
    layer.bias = Eigen::VectorXd::Zero(dims[i + 1]);
    layer.activation = acts[i];
    layers_.push_back(std::move(layer));
  }
}

DenseNet DenseNet::Init(const std::vector<int>& dims,
                        const std::vector<Activation>& acts, Rng& rng) {
  DenseNet net(dims, acts);
  for (auto& layer : net.layers_) {
    const double limit = std::sqrt(6.0 / (layer.in_dim() + layer.out_dim()));
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
        layer.weight(i, j) = UniformReal(rng, -limit, limit);
      }
    }
  }
  return net;
}

int DenseNet::in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }

int DenseNet::out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

Eigen::MatrixXd DenseNet::Forward(const Eigen::MatrixXd& input,
                                  DenseTape* tape) const {
  if (input.rows() != in_dim()) {
    throw Error(ErrorCode::kShapeMismatch,
                "input has " + std::to_string(input.rows()) +
                    " rows, expected " + std::to_string(in_dim()));
  }
  if (tape) {
    tape->inputs.clear();
    tape->pre_activations.clear();
  }
  Eigen::MatrixXd x = input;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = layer.weight * x;
    z.colwise() += layer.bias;
    if (tape) {
      tape->inputs.push_back(std::move(x));
      tape->pre_activations.push_back(z);
    }
    x = layer.activation == Activation::kRelu ? Eigen::MatrixXd(z.cwiseMax(0.0))
                                              : std::move(z);
  }
  return x;
}

Eigen::VectorXd DenseNet::Forward(const Eigen::VectorXd& input,
                                  DenseTape* tape) const {
  return Forward(Eigen::MatrixXd(input), tape).col(0);
}

Eigen::MatrixXd DenseNet::Backward(const DenseTape& tape,
                                   const Eigen::MatrixXd& grad_output,
                                   DenseNet& grads) const {
  if (tape.inputs.size() != layers_.size() ||
      grads.layers_.size() != layers_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tape does not match network");
  }
  Eigen::MatrixXd g = grad_output;
  for (int i = num_layers() - 1; i >= 0; --i) {
    const DenseLayer& layer = layers_[i];
    const Eigen::MatrixXd& z = tape.pre_activations[i];
    if (g.rows() != z.rows() || g.cols() != z.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "gradient does not match tape");
    }
    if (layer.activation == Activation::kRelu) {
      // Derivative at exactly 0 is taken as 0.
      g = (z.array() > 0.0).select(g, 0.0);
    }
    grads.layers_[i].weight.noalias() += g * tape.inputs[i].transpose();
    grads.layers_[i].bias += g.rowwise().sum();
    g = layer.weight.transpose() * g;
  }
  return g;
}

DenseNet DenseNet::ZerosLike() const {
  DenseNet out = *this;
  for (auto& layer : out.layers_) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
  return out;
}

std::size_t DenseNet::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

void DenseNet::VisitBuffers(const std::function<void(double*, std::size_t)>& fn) {
  for (auto& layer : layers_) {
    fn(layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    fn(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
}

void DenseNet::VisitBuffers(
    const std::function<void(const double*, std::size_t)>& fn) const {
  for (const auto& layer : layers_) {
    fn(layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    fn(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
}

nlohmann::json DenseNet::ToJson() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& layer : layers_) {
    // Weights are stored row-major.
    std::vector<double> w;
    w.reserve(layer.weight.size());
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        w.push_back(layer.weight(i, j));
      }
    }
    doc.push_back({{"shape", {layer.out_dim(), layer.in_dim()}},
                   {"activation", ActivationName(layer.activation)},
                   {"weight", w},
                   {"bias", std::vector<double>(layer.bias.data(),
                                                layer.bias.data() +
                                                    layer.bias.size())}});
  }
  return doc;
}

DenseNet DenseNet::FromJson(const nlohmann::json& doc) {
  DenseNet net;
  for (const auto& jl : doc) {
    const auto shape = jl.at("shape").get<std::vector<int>>();
    const auto w = jl.at("weight").get<std::vector<double>>();
    const auto b = jl.at("bias").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] <= 0 || shape[1] <= 0 ||
        w.size() != static_cast<std::size_t>(shape[0]) * shape[1] ||
        b.size() != static_cast<std::size_t>(shape[0])) {
      throw Error(ErrorCode::kShapeMismatch, "malformed layer in checkpoint");
    }
    if (!net.layers_.empty() && net.layers_.back().out_dim() != shape[1]) {
      throw Error(ErrorCode::kShapeMismatch, "incompatible layer sizes");
    }
    DenseLayer layer;
    layer.activation = ActivationFromName(jl.at("activation").get<std::string>());
    layer.weight.resize(shape[0], shape[1]);
    for (int i = 0; i < shape[0]; ++i) {
      for (int j = 0; j < shape[1]; ++j) layer.weight(i, j) = w[i * shape[1] + j];
    }
    layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), shape[0]);
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

Categorical Softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "softmax over empty logits");
  }
  if (logits.hasNaN()) {
    throw Error(ErrorCode::kInvalidArgument, "NaN logits");
  }
  const double max = logits.maxCoeff();
  const Eigen::VectorXd shifted = logits.array() - max;
  const double log_z = std::log(shifted.array().exp().sum());
  Categorical dist;
  dist.log_probs = shifted.array() - log_z;
  dist.probs = dist.log_probs.array().exp();
  dist.entropy = -(dist.probs.array() * dist.log_probs.array()).sum();
  return dist;
}

int SampleIndex(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = Uniform01(rng);
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  // Rounding left the total below u; fall back to the last positive entry.
  for (Eigen::Index i = probs.size() - 1; i >= 0; --i) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

int ArgMax(const Eigen::VectorXd& probs) {
  int best = 0;
  for (Eigen::Index i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = static_cast<int>(i);
  }
  return best;
}

SampledAction SoftmaxSample(const Eigen::VectorXd& logits, Rng& rng) {
  SampledAction out;
  out.dist = Softmax(logits);
  out.action = SampleIndex(out.dist.probs, rng);
  out.log_prob = out.dist.log_probs[out.action];
  return out;
}

Eigen::VectorXd PolicyLossLogitGradient(const Categorical& dist, int action,
                                        double advantage,
                                        double entropy_weight) {
  // d(-log p_a)/dz = p - e_a;  dH/dz_k = -p_k (log p_k + H).
  Eigen::VectorXd grad = advantage * dist.probs;
  grad[action] -= advantage;
  grad.array() += entropy_weight * dist.probs.array() *
                  (dist.log_probs.array() + dist.entropy);
  return grad;
}

AdamState::AdamState(AdamConfig cfg, Eigen::Index num_params)
    : config(cfg),
      first_moment(Eigen::VectorXd::Zero(num_params)),
      second_moment(Eigen::VectorXd::Zero(num_params)) {}

void AdamStep(Eigen::VectorXd& params, const Eigen::VectorXd& grads,
              AdamState& state, double lr_scale) {
  if (grads.size() != params.size() ||
      state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "Adam state does not match params");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  state.first_moment = c.beta1 * state.first_moment + (1.0 - c.beta1) * grads;
  state.second_moment = c.beta2 * state.second_moment +
                        (1.0 - c.beta2) * grads.cwiseProduct(grads);
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  const double lr = c.learning_rate * lr_scale;
  params.array() -= lr * (state.first_moment.array() / correction1) /
                    ((state.second_moment.array() / correction2).sqrt() +
                     c.epsilon);
}

nlohmann::json AdamToJson(const AdamState& state) {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  return {{"learning_rate", state.config.learning_rate},
          {"beta1", state.config.beta1},
          {"beta2", state.config.beta2},
          {"epsilon", state.config.epsilon},
          {"step", state.step},
          {"first_moment", vec(state.first_moment)},
          {"second_moment", vec(state.second_moment)}};
}

AdamState AdamFromJson(const nlohmann::json& doc) {
  AdamState state;
  state.config.learning_rate = doc.at("learning_rate").get<double>();
  state.config.beta1 = doc.at("beta1").get<double>();
  state.config.beta2 = doc.at("beta2").get<double>();
  state.config.epsilon = doc.at("epsilon").get<double>();
  state.step = doc.at("step").get<std::int64_t>();
  const auto m = doc.at("first_moment").get<std::vector<double>>();
  const auto v = doc.at("second_moment").get<std::vector<double>>();
  if (m.size() != v.size()) {
    throw Error(ErrorCode::kShapeMismatch, "Adam moment sizes differ");
  }
  state.first_moment = Eigen::Map<const Eigen::VectorXd>(
      m.data(), static_cast<Eigen::Index>(m.size()));
  state.second_moment = Eigen::Map<const Eigen::VectorXd>(
      v.data(), static_cast<Eigen::Index>(v.size()));
  return state;
}

GradientCheck FiniteDifferenceCheck(
    const std::function<double(const Eigen::VectorXd&)>& loss,
    const Eigen::VectorXd& params, const Eigen::VectorXd& analytic, double h,
    std::optional<int> max_coords, std::uint64_t seed) {
  if (analytic.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient size mismatch");
  }
  std::vector<Eigen::Index> coords(static_cast<std::size_t>(params.size()));
  std::iota(coords.begin(), coords.end(), Eigen::Index{0});
  if (max_coords && *max_coords < static_cast<int>(coords.size())) {
    Rng rng(seed);
    for (std::size_t i = coords.size() - 1; i > 0; --i) {
      std::swap(coords[i], coords[UniformIndex(rng, i + 1)]);
    }
    coords.resize(static_cast<std::size_t>(*max_coords));
    std::sort(coords.begin(), coords.end());
  }

  GradientCheck result;
  const double f0 = loss(params);
  Eigen::VectorXd p = params;
  for (Eigen::Index i : coords) {
    p[i] = params[i] + h;
    const double f_plus = loss(p);
    p[i] = params[i] - h;
    const double f_minus = loss(p);
    p[i] = params[i];
    const double forward = (f_plus - f0) / h;
    const double backward = (f0 - f_minus) / h;
    if (std::abs(forward - backward) >
        1e-3 * std::max(std::abs(forward), std::abs(backward)) + 1e-7) {
      ++result.skipped_kinks;
      continue;
    }
    const double numeric = (f_plus - f_minus) / (2.0 * h);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double err = std::abs(a - numeric) / denom;
    ++result.checked;
    if (err > result.max_relative_error || result.worst_index < 0) {
      result.max_relative_error = std::max(result.max_relative_error, err);
      result.worst_index = static_cast<int>(i);
    }
  }
  return result;
}

}  // namespace placement::nn
