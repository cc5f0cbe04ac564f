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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rccpfl/data_model.hpp"
#include "rccpfl/ledger.hpp"
#include "rccpfl/similarity.hpp"
#include "rccpfl/training.hpp"

namespace rccpfl {

/// What one simulated user holds: model inputs with (possibly noisy) labels,
/// and the label-free mapped features used for data-similarity clustering.
struct ClientData {
  std::size_t user_id = 0;
  std::size_t intended_task = 0;
  FeatureMatrix train_features;
  std::vector<Label> train_labels;
  FeatureMatrix mapped_features;
};

struct TestSet {
  FeatureMatrix features;
  std::vector<Label> labels;
};

/// Users plus one held-out test set per task. A user is scored on the test
/// set of its intended task with the model of the cluster it belongs to.
struct Federation {
  TaskSpec task_spec;
  std::vector<ClientData> clients;
  std::vector<TestSet> task_tests;

  std::size_t num_users() const noexcept { return clients.size(); }
  std::size_t num_tasks() const noexcept { return task_spec.num_tasks(); }
  /// Ground-truth assignment: every user in the cluster of its intended task.
  ClusterAssignment ground_truth() const;
};

enum class Algorithm { rcc_pfl, ifca_pfl, optimum, single_global };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& text);

struct RunConfig {
  Algorithm algorithm = Algorithm::rcc_pfl;
  std::size_t global_rounds = 30;
  TrainConfig train;
  ModelArch arch;
  std::size_t ifca_freeze_patience = 3;
  std::size_t ifca_max_reinit = 20;
  double eigen_floor = kDefaultEigenFloor;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
};

struct GroupMetrics {
  std::size_t index = 0;
  std::size_t users = 0;
  double loss = 0.0;      // mean over the users of the group
  double accuracy = 0.0;  // mean over the users of the group
};

struct RoundMetrics {
  std::size_t round = 0;
  std::vector<GroupMetrics> clusters;  // keyed by model index
  std::vector<GroupMetrics> tasks;     // keyed by intended task
  ClusterAssignment ci;
  bool reassociated = false;
};

struct RunMetrics {
  std::vector<RoundMetrics> rounds;
  std::vector<double> user_accuracy;  // after the last round
  std::vector<double> user_loss;
  double mean_user_accuracy = 0.0;
  double sample_weighted_accuracy = 0.0;
  double mean_user_loss = 0.0;
  std::size_t reassociation_rounds = 0;
  std::size_t reinit_attempts = 0;
};

struct RunResult {
  Algorithm algorithm = Algorithm::rcc_pfl;
  std::vector<ModelWeights> models;
  ClusterAssignment ci;
  CommLedger ledger;
  RunMetrics metrics;
  std::optional<SimilarityMatrix> similarity;  // data-similarity runs only
};

/// One-shot data-similarity clustering on the mapped features, then
/// `global_rounds` rounds of per-cluster FedAvg.
RunResult run_rcc_pfl(const Federation& fed, const RunConfig& cfg);

/// Loss-based clustering: an initial re-association pass on fresh models, then
/// per round local training, aggregation and re-association until the
/// assignment has stayed unchanged for `ifca_freeze_patience` rounds.
RunResult run_ifca_pfl(const Federation& fed, const RunConfig& cfg);

/// Genie-aided clustering by intended task; same training loop as RCC-PFL.
RunResult run_optimum(const Federation& fed, const RunConfig& cfg);

/// One model shared by every user.
RunResult run_single_global(const Federation& fed, const RunConfig& cfg);

RunResult run_algorithm(const Federation& fed, const RunConfig& cfg);

/// K x M table of each user's mean cross-entropy on its local training data
/// under each model.
Eigen::MatrixXd local_loss_table(const Federation& fed,
                                 std::span<const ModelWeights> models,
                                 std::size_t threads = 1);

/// Argmin per row (ties to the smallest index); clusters may end up empty.
ClusterAssignment assign_by_min_loss(const Eigen::MatrixXd& losses);

/// Argmin per row, then fills empty clusters in ascending order: each takes
/// the movable user with the smallest loss under that cluster's model (ties
/// to the smallest user id). A user alone in its cluster is pinned. Throws
/// ConfigError if there are fewer users than clusters.
ClusterAssignment reassociate_from_losses(const Eigen::MatrixXd& losses);

using ModelReinitializer = std::function<std::vector<ModelWeights>(std::size_t attempt)>;

struct Reassociation {
  ClusterAssignment ci;
  std::vector<ModelWeights> models;  // replaced when reinitialization happened
  std::size_t reinit_attempts = 0;
  bool forced = false;
  std::size_t probes = 0;  // times every user evaluated all M models
};

/// Loss-based cluster re-association. Before training starts, an assignment
/// with an empty cluster triggers fresh models from `reinit` (attempt 1, 2,
/// ...) up to `max_reinit` times before falling back to forced filling; once
/// training has started, empty clusters are filled directly.
Reassociation cluster_reassociation(const Federation& fed,
                                    std::vector<ModelWeights> models,
                                    bool training_started,
                                    const ModelReinitializer& reinit,
                                    std::size_t max_reinit = 20,
                                    std::size_t threads = 1);

}  // namespace rccpfl
