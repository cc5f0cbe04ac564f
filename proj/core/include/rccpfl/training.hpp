/*
 * Copyright 2026 The rccpfl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include <Eigen/Core>

#include "rccpfl/data_model.hpp"

namespace rccpfl {

enum class ModelKind { logistic, mlp };

struct ModelArch {
  ModelKind kind = ModelKind::logistic;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 200;  // mlp only
  std::size_t output_dim = 0;

  std::size_t parameter_count() const;
  /// Throws ConfigError on zero dimensions.
  void validate() const;

  friend bool operator==(const ModelArch&, const ModelArch&) = default;
};

/// Flat parameters, layer by layer: row-major (out x in) weight matrix, then
/// the bias vector.
struct ModelWeights {
  ModelArch arch;
  Eigen::VectorXd params;
};

struct TrainConfig {
  double learning_rate = 5e-5;
  std::size_t epochs = 2;
  std::size_t batch_size = 32;
  double weight_decay = 1e-3;
  std::uint64_t seed = 0;
};

struct Evaluation {
  double loss = 0.0;      // mean cross-entropy
  double accuracy = 0.0;  // fraction of argmax-correct predictions
};

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
ModelWeights init_weights(const ModelArch& arch, std::uint64_t seed);

/// Pre-softmax outputs, one row per sample.
Eigen::MatrixXd forward(const ModelWeights& w, const FeatureMatrix& x);

/// Mean softmax cross-entropy plus (weight_decay / 2) * |W|^2 over weight
/// matrices only (biases are not decayed), with its analytic gradient.
LossAndGradient loss_and_gradient(const ModelWeights& w, const FeatureMatrix& x,
                                  std::span<const Label> labels,
                                  double weight_decay);

/// `epochs` passes of mini-batch SGD, reshuffling with a stream seeded by
/// cfg.seed at every epoch; the last partial batch is kept. Throws
/// TrainingDiverged (tagged with `round`) if parameters stop being finite.
ModelWeights sgd_local_train(const ModelWeights& w, const FeatureMatrix& x,
                             std::span<const Label> labels,
                             const TrainConfig& cfg, std::size_t round = 0);

/// Unweighted mean of the parameter vectors, summed in the given order.
/// Throws AggregationError on an empty list or mixed architectures.
ModelWeights fedavg(std::span<const ModelWeights> weights);

/// Argmax ties resolve to the smaller class index.
Evaluation evaluate(const ModelWeights& w, const FeatureMatrix& x,
                    std::span<const Label> labels);

/// Text header line describing the architecture, then the parameters as
/// little-endian 64-bit floats.
void save_checkpoint(std::ostream& out, const ModelWeights& w);
ModelWeights load_checkpoint(std::istream& in);

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

}  // namespace rccpfl
