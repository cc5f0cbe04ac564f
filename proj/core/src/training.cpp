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

#include "rccpfl/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rccpfl/error.hpp"
#include "rccpfl/seed.hpp"

namespace rccpfl {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

struct Layer {
  Eigen::Index in;
  Eigen::Index out;
  Eigen::Index offset;  // start of the weight block; biases follow it

  Eigen::Index weight_count() const { return in * out; }
  Eigen::Index bias_offset() const { return offset + weight_count(); }
  Eigen::Index end() const { return bias_offset() + out; }
};

std::vector<Layer> layers_of(const ModelArch& arch) {
  const auto p = static_cast<Eigen::Index>(arch.input_dim);
  const auto c = static_cast<Eigen::Index>(arch.output_dim);
  if (arch.kind == ModelKind::logistic) return {{p, c, 0}};
  const auto h = static_cast<Eigen::Index>(arch.hidden_dim);
  const Layer first{p, h, 0};
  return {first, {h, c, first.end()}};
}

ConstMatrixMap weights_of(const Eigen::VectorXd& params, const Layer& l) {
  return ConstMatrixMap(params.data() + l.offset, l.out, l.in);
}

// Row-wise softmax in place.
void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double top = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - top).exp();
    z.row(i) /= z.row(i).sum();
  }
}

double cross_entropy_sum(const Eigen::MatrixXd& logits, std::span<const Label> labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    const double lse = top + std::log((logits.row(i).array() - top).exp().sum());
    total += lse - logits(i, labels[static_cast<std::size_t>(i)]);
  }
  return total;
}

void check_labels(const ModelWeights& w, const FeatureMatrix& x,
                  std::span<const Label> labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw ShapeError("feature rows do not match label count");
  }
  if (static_cast<std::size_t>(x.cols()) != w.arch.input_dim) {
    throw ShapeError("feature dimension does not match model input");
  }
  for (Label y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= w.arch.output_dim) {
      throw ShapeError("label outside model output range");
    }
  }
}

}  // namespace

std::size_t ModelArch::parameter_count() const {
  const auto ls = layers_of(*this);
  return static_cast<std::size_t>(ls.back().end());
}

void ModelArch::validate() const {
  if (input_dim == 0 || output_dim == 0 || (kind == ModelKind::mlp && hidden_dim == 0)) {
    throw ConfigError("model architecture dimensions must be positive");
  }
}

ModelWeights init_weights(const ModelArch& arch, std::uint64_t seed) {
  arch.validate();
  ModelWeights w{arch, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.parameter_count()))};
  Rng rng(seed);
  for (const auto& l : layers_of(arch)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (Eigen::Index i = 0; i < l.weight_count(); ++i) {
      w.params(l.offset + i) = uniform(rng);
    }
  }
  return w;
}

Eigen::MatrixXd forward(const ModelWeights& w, const FeatureMatrix& x) {
  const auto ls = layers_of(w.arch);
  Eigen::MatrixXd a = x;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const auto& l = ls[i];
    Eigen::MatrixXd z = a * weights_of(w.params, l).transpose();
    z.rowwise() += w.params.segment(l.bias_offset(), l.out).transpose();
    if (i + 1 < ls.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

LossAndGradient loss_and_gradient(const ModelWeights& w, const FeatureMatrix& x,
                                  std::span<const Label> labels,
                                  double weight_decay) {
  check_labels(w, x, labels);
  const auto ls = layers_of(w.arch);
  const auto n = static_cast<double>(x.rows());

  // Forward pass, keeping pre-activations for the backward pass.
  std::vector<Eigen::MatrixXd> inputs{x};
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const auto& l = ls[i];
    Eigen::MatrixXd z = inputs.back() * weights_of(w.params, l).transpose();
    z.rowwise() += w.params.segment(l.bias_offset(), l.out).transpose();
    pre.push_back(z);
    if (i + 1 < ls.size()) inputs.push_back(z.cwiseMax(0.0));
  }

  LossAndGradient out;
  out.loss = cross_entropy_sum(pre.back(), labels) / n;
  out.gradient = Eigen::VectorXd::Zero(w.params.size());

  Eigen::MatrixXd delta = pre.back();
  softmax_rows(delta);
  for (Eigen::Index i = 0; i < delta.rows(); ++i) {
    delta(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  }
  delta /= n;

  for (std::size_t li = ls.size(); li-- > 0;) {
    const auto& l = ls[li];
    const auto W = weights_of(w.params, l);
    MatrixMap grad_w(out.gradient.data() + l.offset, l.out, l.in);
    grad_w = delta.transpose() * inputs[li];
    grad_w += weight_decay * W;
    out.gradient.segment(l.bias_offset(), l.out) = delta.colwise().sum().transpose();
    out.loss += 0.5 * weight_decay * W.squaredNorm();
    if (li > 0) {
      Eigen::MatrixXd back = delta * W;
      delta = back.cwiseProduct((pre[li - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

ModelWeights sgd_local_train(const ModelWeights& w, const FeatureMatrix& x,
                             std::span<const Label> labels,
                             const TrainConfig& cfg, std::size_t round) {
  check_labels(w, x, labels);
  if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!w.params.allFinite()) throw TrainingDiverged(round, "non-finite initial weights");

  ModelWeights out = w;
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(cfg.seed);
  std::vector<Label> batch_labels;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
      const FeatureMatrix batch = x(rows, Eigen::placeholders::all);
      batch_labels.clear();
      for (auto r : rows) batch_labels.push_back(labels[static_cast<std::size_t>(r)]);
      const auto step = loss_and_gradient(out, batch, batch_labels, cfg.weight_decay);
      out.params -= cfg.learning_rate * step.gradient;
    }
    if (!out.params.allFinite()) {
      throw TrainingDiverged(round, "non-finite parameters after epoch " +
                                        std::to_string(epoch));
    }
  }
  return out;
}

ModelWeights fedavg(std::span<const ModelWeights> weights) {
  if (weights.empty()) throw AggregationError("fedavg: no member models (empty cluster)");
  ModelWeights out{weights.front().arch,
                   Eigen::VectorXd::Zero(weights.front().params.size())};
  for (const auto& w : weights) {
    if (!(w.arch == out.arch) || w.params.size() != out.params.size()) {
      throw AggregationError("fedavg: models differ in architecture");
    }
    out.params += w.params;
  }
  out.params /= static_cast<double>(weights.size());
  return out;
}

Evaluation evaluate(const ModelWeights& w, const FeatureMatrix& x,
                    std::span<const Label> labels) {
  check_labels(w, x, labels);
  if (labels.empty()) throw ShapeError("evaluate: empty dataset");
  const Eigen::MatrixXd logits = forward(w, x);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    if (best == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  const auto n = static_cast<double>(labels.size());
  return {cross_entropy_sum(logits, labels) / n, static_cast<double>(correct) / n};
}

std::string to_string(ModelKind kind) {
  return kind == ModelKind::logistic ? "logistic" : "mlp";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "logistic") return ModelKind::logistic;
  if (text == "mlp") return ModelKind::mlp;
  throw ConfigError("unknown model kind '" + text + "'");
}

void save_checkpoint(std::ostream& out, const ModelWeights& w) {
  out << "rccpfl-weights kind=" << to_string(w.arch.kind)
      << " input_dim=" << w.arch.input_dim << " hidden_dim=" << w.arch.hidden_dim
      << " output_dim=" << w.arch.output_dim << " count=" << w.params.size() << '\n';
  for (Eigen::Index i = 0; i < w.params.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(w.params(i));
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    out.write(bytes, 8);
  }
  if (!out) throw IoError("save_checkpoint: write failed");
}

ModelWeights load_checkpoint(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("load_checkpoint: missing header");
  std::istringstream fields(header);
  std::string magic;
  fields >> magic;
  if (magic != "rccpfl-weights") throw FormatError("load_checkpoint: bad magic");
  ModelWeights w;
  std::size_t count = 0;
  std::string field;
  while (fields >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw FormatError("load_checkpoint: bad header field");
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    if (key == "kind") w.arch.kind = parse_model_kind(value);
    else if (key == "input_dim") w.arch.input_dim = std::stoul(value);
    else if (key == "hidden_dim") w.arch.hidden_dim = std::stoul(value);
    else if (key == "output_dim") w.arch.output_dim = std::stoul(value);
    else if (key == "count") count = std::stoul(value);
  }
  w.arch.validate();
  if (count != w.arch.parameter_count()) {
    throw ConsistencyError("load_checkpoint: count does not match architecture");
  }
  w.params.resize(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
      throw IoError("load_checkpoint: truncated parameters");
    }
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[b]} << (8 * b);
    w.params(static_cast<Eigen::Index>(i)) = std::bit_cast<double>(bits);
  }
  return w;
}

}  // namespace rccpfl
