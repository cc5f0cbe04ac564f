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

#include "rccpfl/orchestrator.hpp"

#include <algorithm>
#include <limits>

#include "rccpfl/error.hpp"
#include "rccpfl/parallel.hpp"
#include "rccpfl/seed.hpp"

namespace rccpfl {
namespace {

std::uint64_t model_size(const RunConfig& cfg) { return cfg.arch.parameter_count(); }

ModelWeights shared_initial_weights(const RunConfig& cfg) {
  return init_weights(cfg.arch, derive_seed(cfg.master_seed, "init"));
}

void check_federation(const Federation& fed, const RunConfig& cfg) {
  if (fed.clients.empty()) throw ConfigError("federation has no users");
  if (cfg.global_rounds == 0) throw ConfigError("global_rounds must be at least 1");
  if (fed.task_tests.size() != fed.num_tasks()) {
    throw ConfigError("federation needs one test set per task");
  }
  for (std::size_t k = 0; k < fed.clients.size(); ++k) {
    if (fed.clients[k].user_id != k) throw ConfigError("client ids must be 0..K-1 in order");
    if (fed.clients[k].intended_task >= fed.num_tasks()) {
      throw ConfigError("client intended task out of range");
    }
  }
  cfg.arch.validate();
}

// Test-set evaluation of model m on task t, shared by every user with that
// (cluster, task) pair.
class EvalCache {
 public:
  EvalCache(const Federation& fed, const std::vector<ModelWeights>& models)
      : fed_(fed), models_(models),
        cache_(models.size() * fed.num_tasks()) {}

  const Evaluation& get(std::size_t m, std::size_t t) {
    auto& slot = cache_[m * fed_.num_tasks() + t];
    if (!slot) {
      const auto& test = fed_.task_tests[t];
      slot = evaluate(models_[m], test.features, test.labels);
    }
    return *slot;
  }

 private:
  const Federation& fed_;
  const std::vector<ModelWeights>& models_;
  std::vector<std::optional<Evaluation>> cache_;
};

RoundMetrics score_round(const Federation& fed, const std::vector<ModelWeights>& models,
                         const ClusterAssignment& ci, std::size_t round,
                         std::vector<Evaluation>* per_user) {
  EvalCache cache(fed, models);
  RoundMetrics rm;
  rm.round = round;
  rm.ci = ci;
  rm.clusters.resize(ci.num_clusters());
  rm.tasks.resize(fed.num_tasks());
  for (std::size_t m = 0; m < rm.clusters.size(); ++m) rm.clusters[m].index = m;
  for (std::size_t t = 0; t < rm.tasks.size(); ++t) rm.tasks[t].index = t;
  if (per_user) per_user->clear();

  for (std::size_t k = 0; k < fed.num_users(); ++k) {
    const std::size_t m = ci.cluster_of(k);
    const std::size_t t = fed.clients[k].intended_task;
    const auto& e = cache.get(m, t);
    for (auto* g : {&rm.clusters[m], &rm.tasks[t]}) {
      ++g->users;
      g->loss += e.loss;
      g->accuracy += e.accuracy;
    }
    if (per_user) per_user->push_back(e);
  }
  for (auto* groups : {&rm.clusters, &rm.tasks}) {
    for (auto& g : *groups) {
      if (g.users == 0) continue;
      g.loss /= static_cast<double>(g.users);
      g.accuracy /= static_cast<double>(g.users);
    }
  }
  return rm;
}

void finalize_metrics(const Federation& fed, const std::vector<Evaluation>& per_user,
                      RunMetrics& metrics) {
  metrics.user_accuracy.clear();
  metrics.user_loss.clear();
  double correct = 0.0;
  double seen = 0.0;
  for (std::size_t k = 0; k < per_user.size(); ++k) {
    metrics.user_accuracy.push_back(per_user[k].accuracy);
    metrics.user_loss.push_back(per_user[k].loss);
    const auto n = static_cast<double>(fed.task_tests[fed.clients[k].intended_task].labels.size());
    correct += per_user[k].accuracy * n;
    seen += n;
  }
  const auto K = static_cast<double>(per_user.size());
  double acc = 0.0;
  double loss = 0.0;
  for (const auto& e : per_user) {
    acc += e.accuracy;
    loss += e.loss;
  }
  metrics.mean_user_accuracy = acc / K;
  metrics.mean_user_loss = loss / K;
  metrics.sample_weighted_accuracy = seen > 0.0 ? correct / seen : 0.0;
}

// Hook run after each round's aggregation; returns true if the cluster
// assignment was re-estimated in that round.
using AfterAggregation = std::function<bool(std::size_t round,
                                            std::vector<ModelWeights>& models,
                                            ClusterAssignment& ci)>;

void train_rounds(const Federation& fed, const RunConfig& cfg,
                  std::vector<ModelWeights>& models, ClusterAssignment& ci,
                  CommLedger& ledger, RunMetrics& metrics,
                  const AfterAggregation& after = {}) {
  const std::size_t K = fed.num_users();
  const std::uint64_t P = model_size(cfg);
  std::vector<Evaluation> per_user;

  for (std::size_t round = 1; round <= cfg.global_rounds; ++round) {
    std::vector<ModelWeights> local(K);
    parallel_for(K, cfg.threads, [&](std::size_t k) {
      const auto& client = fed.clients[k];
      TrainConfig tc = cfg.train;
      tc.seed = derive_seed(cfg.master_seed, "sgd", round, k);
      local[k] = sgd_local_train(models[ci.cluster_of(k)], client.train_features,
                                 client.train_labels, tc, round);
    });
    for (std::size_t k = 0; k < K; ++k) {
      ledger.record(round, k, CommCategory::weight_broadcast, 0, P);
      ledger.record(round, k, CommCategory::weight_upload, P, 0);
    }
    for (std::size_t m = 0; m < ci.num_clusters(); ++m) {
      std::vector<ModelWeights> members;
      for (std::size_t k : ci.members(m)) members.push_back(std::move(local[k]));
      models[m] = fedavg(members);
    }
    const bool reassociated = after ? after(round, models, ci) : false;
    if (reassociated) ++metrics.reassociation_rounds;

    auto rm = score_round(fed, models, ci, round,
                          round == cfg.global_rounds ? &per_user : nullptr);
    rm.reassociated = reassociated;
    metrics.rounds.push_back(std::move(rm));
  }
  finalize_metrics(fed, per_user, metrics);
}

RunResult run_with_fixed_clusters(const Federation& fed, const RunConfig& cfg,
                                  Algorithm algorithm, ClusterAssignment ci,
                                  CommLedger ledger) {
  RunResult result;
  result.algorithm = algorithm;
  result.models.assign(ci.num_clusters(), shared_initial_weights(cfg));
  train_rounds(fed, cfg, result.models, ci, ledger, result.metrics);
  result.ci = std::move(ci);
  result.ledger = std::move(ledger);
  return result;
}

}  // namespace

ClusterAssignment Federation::ground_truth() const {
  std::vector<std::size_t> labels;
  for (const auto& c : clients) labels.push_back(c.intended_task);
  return ClusterAssignment(std::move(labels), num_tasks());
}

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::rcc_pfl: return "rcc_pfl";
    case Algorithm::ifca_pfl: return "ifca_pfl";
    case Algorithm::optimum: return "optimum";
    case Algorithm::single_global: return "single_global";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& text) {
  for (auto a : {Algorithm::rcc_pfl, Algorithm::ifca_pfl, Algorithm::optimum,
                 Algorithm::single_global}) {
    if (to_string(a) == text) return a;
  }
  throw ConfigError("unknown algorithm '" + text + "'");
}

RunResult run_rcc_pfl(const Federation& fed, const RunConfig& cfg) {
  check_federation(fed, cfg);
  const std::size_t K = fed.num_users();
  std::vector<FeatureMatrix> mapped;
  mapped.reserve(K);
  for (const auto& c : fed.clients) mapped.push_back(c.mapped_features);
  auto clustering =
      cluster_by_data_similarity(mapped, fed.num_tasks(), cfg.eigen_floor, cfg.threads);

  // Each user publishes its d x d eigenvector matrix once and fetches every
  // other user's; then it reports K - 1 relevance values to the server.
  CommLedger ledger(K);
  const std::uint64_t d = clustering.spectra.front().dim();
  for (std::size_t k = 0; k < K; ++k) {
    ledger.record(0, k, CommCategory::eigenvector_exchange, d * d, (K - 1) * d * d);
    ledger.record(0, k, CommCategory::relevance_report, K - 1, 0);
  }
  auto result = run_with_fixed_clusters(fed, cfg, Algorithm::rcc_pfl,
                                        std::move(clustering.assignment), std::move(ledger));
  result.similarity = std::move(clustering.similarity);
  return result;
}

RunResult run_optimum(const Federation& fed, const RunConfig& cfg) {
  check_federation(fed, cfg);
  return run_with_fixed_clusters(fed, cfg, Algorithm::optimum, fed.ground_truth(),
                                 CommLedger(fed.num_users()));
}

RunResult run_single_global(const Federation& fed, const RunConfig& cfg) {
  check_federation(fed, cfg);
  ClusterAssignment ci(std::vector<std::size_t>(fed.num_users(), 0), 1);
  return run_with_fixed_clusters(fed, cfg, Algorithm::single_global, std::move(ci),
                                 CommLedger(fed.num_users()));
}

RunResult run_ifca_pfl(const Federation& fed, const RunConfig& cfg) {
  check_federation(fed, cfg);
  const std::size_t K = fed.num_users();
  const std::size_t M = fed.num_tasks();
  const std::uint64_t P = model_size(cfg);

  // Attempt 0 starts cluster 0 from the shared initial weights so that M = 1
  // reproduces the single-model run; every other model gets its own stream.
  auto initial_models = [&](std::size_t attempt) {
    std::vector<ModelWeights> models;
    for (std::size_t m = 0; m < M; ++m) {
      models.push_back(attempt == 0 && m == 0
                           ? shared_initial_weights(cfg)
                           : init_weights(cfg.arch, derive_seed(cfg.master_seed,
                                                                "ifca-init", attempt, m)));
    }
    return models;
  };

  RunResult result;
  result.algorithm = Algorithm::ifca_pfl;
  result.ledger = CommLedger(K);
  auto initial = cluster_reassociation(fed, initial_models(0), false, initial_models,
                                       cfg.ifca_max_reinit, cfg.threads);
  for (std::size_t k = 0; k < K; ++k) {
    result.ledger.record(0, k, CommCategory::model_probe, 0, initial.probes * M * P);
  }
  result.metrics.reinit_attempts = initial.reinit_attempts;
  result.models = std::move(initial.models);
  ClusterAssignment ci = std::move(initial.ci);

  std::size_t unchanged = 0;
  bool frozen = false;
  auto after = [&](std::size_t round, std::vector<ModelWeights>& models,
                   ClusterAssignment& assignment) {
    if (frozen) return false;
    auto next = cluster_reassociation(fed, models, true, {}, 0, cfg.threads);
    // The user already receives its own cluster's model as the broadcast.
    for (std::size_t k = 0; k < K; ++k) {
      result.ledger.record(round, k, CommCategory::model_probe, 0, (M - 1) * P);
    }
    unchanged = next.ci == assignment ? unchanged + 1 : 0;
    assignment = std::move(next.ci);
    if (unchanged >= cfg.ifca_freeze_patience) frozen = true;
    return true;
  };
  train_rounds(fed, cfg, result.models, ci, result.ledger, result.metrics, after);
  result.ci = std::move(ci);
  return result;
}

RunResult run_algorithm(const Federation& fed, const RunConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::rcc_pfl: return run_rcc_pfl(fed, cfg);
    case Algorithm::ifca_pfl: return run_ifca_pfl(fed, cfg);
    case Algorithm::optimum: return run_optimum(fed, cfg);
    case Algorithm::single_global: return run_single_global(fed, cfg);
  }
  throw ConfigError("unknown algorithm");
}

Eigen::MatrixXd local_loss_table(const Federation& fed,
                                 std::span<const ModelWeights> models,
                                 std::size_t threads) {
  const std::size_t K = fed.num_users();
  const std::size_t M = models.size();
  Eigen::MatrixXd losses(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(M));
  parallel_for(K, threads, [&](std::size_t k) {
    const auto& c = fed.clients[k];
    for (std::size_t m = 0; m < M; ++m) {
      losses(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) =
          evaluate(models[m], c.train_features, c.train_labels).loss;
    }
  });
  return losses;
}

ClusterAssignment assign_by_min_loss(const Eigen::MatrixXd& losses) {
  if (losses.cols() == 0) throw ConfigError("reassociation: no models");
  std::vector<std::size_t> labels(static_cast<std::size_t>(losses.rows()));
  for (Eigen::Index k = 0; k < losses.rows(); ++k) {
    Eigen::Index best = 0;
    for (Eigen::Index m = 1; m < losses.cols(); ++m) {
      if (losses(k, m) < losses(k, best)) best = m;
    }
    labels[static_cast<std::size_t>(k)] = static_cast<std::size_t>(best);
  }
  return ClusterAssignment(std::move(labels), static_cast<std::size_t>(losses.cols()));
}

ClusterAssignment reassociate_from_losses(const Eigen::MatrixXd& losses) {
  const auto K = static_cast<std::size_t>(losses.rows());
  const auto M = static_cast<std::size_t>(losses.cols());
  if (K < M) throw ConfigError("reassociation: fewer users than clusters");
  auto ci = assign_by_min_loss(losses);
  if (ci.all_clusters_nonempty()) return ci;

  auto labels = ci.labels();
  auto sizes = ci.sizes();
  for (std::size_t m = 0; m < M; ++m) {
    if (sizes[m] > 0) continue;
    std::size_t pick = K;
    for (std::size_t k = 0; k < K; ++k) {
      if (sizes[labels[k]] < 2) continue;  // pinned: alone in its cluster
      if (pick == K || losses(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) <
                           losses(static_cast<Eigen::Index>(pick), static_cast<Eigen::Index>(m))) {
        pick = k;
      }
    }
    --sizes[labels[pick]];
    labels[pick] = m;
    sizes[m] = 1;
  }
  return ClusterAssignment(std::move(labels), M);
}

Reassociation cluster_reassociation(const Federation& fed,
                                    std::vector<ModelWeights> models,
                                    bool training_started,
                                    const ModelReinitializer& reinit,
                                    std::size_t max_reinit, std::size_t threads) {
  const std::size_t M = models.size();
  if (fed.num_users() < M) throw ConfigError("reassociation: fewer users than clusters");
  Reassociation out;
  for (;;) {
    const auto losses = local_loss_table(fed, models, threads);
    ++out.probes;
    auto ci = assign_by_min_loss(losses);
    if (ci.all_clusters_nonempty()) {
      out.ci = std::move(ci);
      break;
    }
    if (!training_started && reinit && out.reinit_attempts < max_reinit) {
      ++out.reinit_attempts;
      models = reinit(out.reinit_attempts);
      continue;
    }
    out.ci = reassociate_from_losses(losses);
    out.forced = true;
    break;
  }
  out.models = std::move(models);
  return out;
}

}  // namespace rccpfl
