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
#include <random>
#include <vector>

#include "rccpfl/data_model.hpp"
#include "rccpfl/orchestrator.hpp"
#include "support/oracles.hpp"

namespace fixtures {

inline rccpfl::FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                           double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  rccpfl::FeatureMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

struct SimilarityInstance {
  std::vector<rccpfl::FeatureMatrix> users;
  std::vector<oracle::Spectrum> oracle_spectra;
};

// K users with d <= 3 features and well separated eigenvalues. Instances whose
// second moments have a relative eigen-gap below 1e-3 are redrawn, since
// eigenvectors of nearly repeated eigenvalues are not comparable across
// implementations.
inline SimilarityInstance random_similarity_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick_d(1, 3), pick_k(2, 5), pick_extra(0, 4);
  std::uniform_real_distribution<double> pick_scale(0.2, 3.0);
  const std::size_t d = pick_d(rng);
  const std::size_t k = pick_k(rng);
  SimilarityInstance out;
  while (out.users.size() < k) {
    auto x = random_matrix(d + pick_extra(rng), d, rng, pick_scale(rng));
    auto spec = oracle::spectrum(x);
    if (d > 1 && oracle::relative_gap(spec.values) < 1e-3) continue;
    out.users.push_back(std::move(x));
    out.oracle_spectra.push_back(std::move(spec));
  }
  return out;
}

// Well separated Gaussian data for M tasks, users split equally, identity
// features. Labels can be corrupted afterwards by the caller.
inline rccpfl::Federation blob_federation(std::size_t users_per_task, std::size_t num_tasks,
                                          std::size_t samples, std::uint64_t seed) {
  std::vector<std::vector<rccpfl::Label>> tasks;
  for (std::size_t m = 0; m < num_tasks; ++m) {
    tasks.push_back({static_cast<int>(2 * m), static_cast<int>(2 * m + 1)});
  }
  rccpfl::TaskSpec ts(static_cast<int>(2 * num_tasks), tasks);
  rccpfl::SyntheticConfig cfg;
  cfg.samples_per_class = samples * users_per_task;
  cfg.feature_dim = 6;
  cfg.class_separation = 5.0;
  cfg.seed = seed;
  const auto train = rccpfl::generate_synthetic(ts, cfg, rccpfl::Split::train);
  cfg.samples_per_class = 40;
  const auto test = rccpfl::generate_synthetic(ts, cfg, rccpfl::Split::test);

  rccpfl::PartitionConfig pc;
  pc.num_users = users_per_task * num_tasks;
  pc.minority_fraction = 0.05;
  pc.seed = seed + 1;
  const auto part = rccpfl::partition_to_users(train, ts, pc);

  rccpfl::Federation fed{ts, {}, {}};
  for (const auto& u : part.users) {
    rccpfl::ClientData c;
    c.user_id = u.user_id;
    c.intended_task = u.intended_task;
    c.train_features = u.features;
    c.train_labels = u.labels;
    c.mapped_features = u.features;
    fed.clients.push_back(std::move(c));
  }
  for (std::size_t m = 0; m < num_tasks; ++m) {
    const auto t = rccpfl::restrict_to_task(test, ts, m);
    fed.task_tests.push_back({t.features, t.labels});
  }
  return fed;
}

inline rccpfl::RunConfig small_run(const rccpfl::Federation& fed, rccpfl::Algorithm algorithm,
                                   std::size_t rounds, std::uint64_t seed) {
  rccpfl::RunConfig cfg;
  cfg.algorithm = algorithm;
  cfg.global_rounds = rounds;
  cfg.train.learning_rate = 0.05;
  cfg.train.epochs = 1;
  cfg.arch.kind = rccpfl::ModelKind::logistic;
  cfg.arch.input_dim = static_cast<std::size_t>(fed.clients.front().train_features.cols());
  cfg.arch.output_dim = static_cast<std::size_t>(fed.task_spec.num_classes());
  cfg.master_seed = seed;
  return cfg;
}

}  // namespace fixtures
