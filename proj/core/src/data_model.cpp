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

#include "rccpfl/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "rccpfl/error.hpp"
#include "rccpfl/seed.hpp"

namespace rccpfl {
namespace {

// Each class keeps ceil(n_c * f * headroom) samples aside for other tasks'
// minority draws. Aggregate demand is about n_c * f; the headroom absorbs the
// spread caused by unequal Dirichlet allocations.
constexpr double kMinorityReserveHeadroom = 1.25;

std::vector<std::size_t> largest_remainder(const std::vector<double>& shares,
                                           std::size_t total) {
  std::vector<std::size_t> counts(shares.size());
  std::vector<double> frac(shares.size());
  std::size_t assigned = 0;
  for (std::size_t u = 0; u < shares.size(); ++u) {
    const double quota = shares[u] * static_cast<double>(total);
    counts[u] = static_cast<std::size_t>(std::floor(quota));
    frac[u] = quota - std::floor(quota);
    assigned += counts[u];
  }
  // Floating error can make the floors overshoot by one in pathological
  // cases; trim from the smallest fractional parts.
  while (assigned > total) {
    auto it = std::min_element(frac.begin(), frac.end());
    const auto u = static_cast<std::size_t>(it - frac.begin());
    if (counts[u] > 0) {
      --counts[u];
      --assigned;
    }
    *it = 2.0;
  }
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return frac[a] > frac[b];
  });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
    ++counts[order[i]];
    ++assigned;
  }
  return counts;
}

std::vector<double> dirichlet(std::size_t n, double concentration, Rng& rng) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> draws(n);
  double sum = 0.0;
  for (auto& d : draws) {
    d = gamma(rng);
    sum += d;
  }
  if (!(sum > 0.0)) {
    std::fill(draws.begin(), draws.end(), 1.0 / static_cast<double>(n));
    return draws;
  }
  for (auto& d : draws) d /= sum;
  return draws;
}

UserDataset gather(const GlobalDataset& data, std::size_t user_id,
                   std::size_t task, std::vector<std::size_t> ids) {
  UserDataset user;
  user.user_id = user_id;
  user.intended_task = task;
  user.features.resize(static_cast<Eigen::Index>(ids.size()),
                       data.features.cols());
  user.labels.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    user.features.row(static_cast<Eigen::Index>(i)) =
        data.features.row(static_cast<Eigen::Index>(ids[i]));
    user.labels.push_back(data.labels[ids[i]]);
  }
  user.flip_mask.assign(ids.size(), false);
  user.sample_ids = std::move(ids);
  return user;
}

}  // namespace

TaskSpec::TaskSpec(int num_classes, std::vector<std::vector<Label>> tasks)
    : num_classes_(num_classes), tasks_(std::move(tasks)) {
  if (num_classes_ <= 0) throw ConfigError("TaskSpec: num_classes must be positive");
  if (tasks_.empty()) throw ConfigError("TaskSpec: at least one task required");
  owner_.assign(static_cast<std::size_t>(num_classes_), -1);
  for (std::size_t m = 0; m < tasks_.size(); ++m) {
    if (tasks_[m].empty()) {
      throw ConfigError("TaskSpec: task " + std::to_string(m) + " is empty");
    }
    for (Label c : tasks_[m]) {
      if (c < 0 || c >= num_classes_) {
        throw ConfigError("TaskSpec: label " + std::to_string(c) +
                          " outside [0, num_classes)");
      }
      auto& owner = owner_[static_cast<std::size_t>(c)];
      if (owner != -1) {
        throw ConfigError("TaskSpec: label " + std::to_string(c) +
                          " appears in more than one task");
      }
      owner = static_cast<int>(m);
    }
  }
}

std::optional<std::size_t> TaskSpec::task_of(Label label) const {
  if (label < 0 || label >= num_classes_) return std::nullopt;
  const int owner = owner_[static_cast<std::size_t>(label)];
  if (owner < 0) return std::nullopt;
  return static_cast<std::size_t>(owner);
}

bool TaskSpec::in_task(Label label, std::size_t m) const {
  const auto t = task_of(label);
  return t && *t == m;
}

std::vector<Label> TaskSpec::labels_outside(std::size_t m) const {
  std::vector<Label> out;
  for (std::size_t t = 0; t < tasks_.size(); ++t) {
    if (t == m) continue;
    out.insert(out.end(), tasks_[t].begin(), tasks_[t].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void GlobalDataset::validate(int num_classes) const {
  if (labels.empty() || features.cols() == 0) {
    throw ConsistencyError("dataset must have n > 0 and p > 0");
  }
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ConsistencyError("feature rows do not match label count");
  }
  for (Label y : labels) {
    if (y < 0 || y >= num_classes) {
      throw ConsistencyError("label " + std::to_string(y) +
                             " outside [0, num_classes)");
    }
  }
}

GlobalDataset generate_synthetic(const TaskSpec& task_spec,
                                 const SyntheticConfig& cfg, Split split) {
  if (cfg.samples_per_class == 0 || cfg.feature_dim == 0 ||
      cfg.class_separation < 0.0) {
    throw ConfigError("generate_synthetic: invalid arguments");
  }
  const auto classes = static_cast<std::size_t>(task_spec.num_classes());
  const auto p = static_cast<Eigen::Index>(cfg.feature_dim);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto mean_rng = make_rng(cfg.seed, "synthetic-means");
  FeatureMatrix means(static_cast<Eigen::Index>(classes), p);
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    for (Eigen::Index j = 0; j < p; ++j) means(c, j) = normal(mean_rng);
    const double norm = means.row(c).norm();
    if (norm > 0.0) means.row(c) *= cfg.class_separation / norm;
  }

  auto rng = make_rng(cfg.seed, split == Split::train ? "synthetic-train"
                                                      : "synthetic-test");
  GlobalDataset out;
  out.split = split;
  out.features.resize(static_cast<Eigen::Index>(classes * cfg.samples_per_class), p);
  out.labels.reserve(classes * cfg.samples_per_class);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < cfg.samples_per_class; ++i, ++row) {
      for (Eigen::Index j = 0; j < p; ++j) {
        out.features(row, j) =
            means(static_cast<Eigen::Index>(c), j) + normal(rng);
      }
      out.labels.push_back(static_cast<Label>(c));
    }
  }
  return out;
}

std::vector<std::size_t> assign_tasks(std::size_t num_users,
                                      std::size_t num_tasks) {
  if (num_tasks == 0) throw ConfigError("assign_tasks: no tasks");
  const std::size_t block = num_users / num_tasks;
  std::vector<std::size_t> tau(num_users);
  for (std::size_t k = 0; k < num_users; ++k) {
    tau[k] = k < block * num_tasks ? k / block : (k - block * num_tasks) % num_tasks;
  }
  return tau;
}

Partition partition_to_users(const GlobalDataset& data,
                             const TaskSpec& task_spec,
                             const PartitionConfig& cfg) {
  const std::size_t K = cfg.num_users;
  const std::size_t M = task_spec.num_tasks();
  if (K < M) throw ConfigError("partition: fewer users than tasks");
  if (!(cfg.dirichlet_concentration > 0.0)) {
    throw ConfigError("partition: Dirichlet concentration must be positive");
  }
  if (!(cfg.minority_fraction >= 0.0 && cfg.minority_fraction < 1.0)) {
    throw ConfigError("partition: minority_fraction must lie in [0, 1)");
  }
  data.validate(task_spec.num_classes());

  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(task_spec.num_classes()));
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }

  const auto tau = assign_tasks(K, M);
  std::vector<std::vector<std::size_t>> users_of(M);
  for (std::size_t k = 0; k < K; ++k) users_of[tau[k]].push_back(k);

  Partition result;
  std::vector<std::vector<std::size_t>> majority(K);
  std::vector<std::size_t> reserve;
  auto rng = make_rng(cfg.seed, "partition");

  for (std::size_t m = 0; m < M; ++m) {
    const auto& members = users_of[m];
    std::size_t task_total = 0;
    for (Label c : task_spec.task(m)) {
      auto pool = by_class[static_cast<std::size_t>(c)];
      if (pool.empty()) {
        throw ConfigError("partition: no samples of class " + std::to_string(c));
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      std::size_t held = 0;
      if (cfg.minority_fraction > 0.0) {
        held = static_cast<std::size_t>(
            std::ceil(static_cast<double>(pool.size()) * cfg.minority_fraction *
                      kMinorityReserveHeadroom));
        held = std::min(held, pool.size() - 1);
      }
      reserve.insert(reserve.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(held));
      const std::size_t available = pool.size() - held;
      task_total += available;

      const auto shares = dirichlet(members.size(), cfg.dirichlet_concentration, rng);
      const auto counts = largest_remainder(shares, available);
      std::size_t offset = held;
      for (std::size_t u = 0; u < members.size(); ++u) {
        auto& dst = majority[members[u]];
        dst.insert(dst.end(), pool.begin() + static_cast<std::ptrdiff_t>(offset),
                   pool.begin() + static_cast<std::ptrdiff_t>(offset + counts[u]));
        offset += counts[u];
      }
    }
    if (task_total < members.size()) {
      throw ConfigError("partition: task " + std::to_string(m) +
                        " has fewer samples than users");
    }
    // Every user needs at least one sample of its own task.
    for (std::size_t k : members) {
      if (!majority[k].empty()) continue;
      std::size_t donor = members.front();
      for (std::size_t j : members) {
        if (majority[j].size() > majority[donor].size()) donor = j;
      }
      majority[k].push_back(majority[donor].back());
      majority[donor].pop_back();
    }
  }

  std::sort(reserve.begin(), reserve.end());
  for (std::size_t k = 0; k < K; ++k) {
    const double f = cfg.minority_fraction;
    auto want = static_cast<std::size_t>(std::llround(
        f * static_cast<double>(majority[k].size()) / (1.0 - f)));
    std::vector<std::size_t> candidates;
    for (std::size_t id : reserve) {
      if (!task_spec.in_task(data.labels[id], tau[k])) candidates.push_back(id);
    }
    if (candidates.size() < want) {
      result.warnings.push_back(
          "user " + std::to_string(k) + ": minority pool holds " +
          std::to_string(candidates.size()) + " samples, wanted " +
          std::to_string(want));
      want = candidates.size();
    }
    auto user_rng = make_rng(cfg.seed, "minority", k);
    const auto picks = sample_without_replacement(candidates.size(), want, user_rng);
    std::set<std::size_t> taken;
    auto ids = majority[k];
    for (std::size_t p : picks) {
      ids.push_back(candidates[p]);
      taken.insert(candidates[p]);
    }
    std::erase_if(reserve, [&](std::size_t id) { return taken.count(id) > 0; });
    result.users.push_back(gather(data, k, tau[k], std::move(ids)));
  }
  return result;
}

void write_partition_report(std::ostream& out, const Partition& partition,
                            const TaskSpec& task_spec) {
  out << "# partition report\n";
  out << "user,intended_task,n_k,minority";
  for (int c = 0; c < task_spec.num_classes(); ++c) out << ",class_" << c;
  out << '\n';
  for (const auto& u : partition.users) {
    std::vector<std::size_t> hist(static_cast<std::size_t>(task_spec.num_classes()));
    std::size_t minority = 0;
    for (Label y : u.labels) {
      ++hist[static_cast<std::size_t>(y)];
      if (!task_spec.in_task(y, u.intended_task)) ++minority;
    }
    out << u.user_id << ',' << u.intended_task << ',' << u.size() << ','
        << minority;
    for (auto h : hist) out << ',' << h;
    out << '\n';
  }
  for (const auto& w : partition.warnings) out << "# warning: " << w << '\n';
}

GlobalDataset restrict_to_task(const GlobalDataset& data,
                               const TaskSpec& task_spec, std::size_t m) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (task_spec.in_task(data.labels[i], m)) rows.push_back(static_cast<Eigen::Index>(i));
  }
  GlobalDataset out;
  out.split = data.split;
  out.image_rows = data.image_rows;
  out.image_cols = data.image_cols;
  out.features = data.features(rows, Eigen::placeholders::all);
  for (auto r : rows) out.labels.push_back(data.labels[static_cast<std::size_t>(r)]);
  return out;
}

GlobalDataset subsample_per_class(const GlobalDataset& data, int num_classes,
                                  std::size_t per_class) {
  std::vector<std::size_t> seen(static_cast<std::size_t>(num_classes));
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    auto& s = seen.at(static_cast<std::size_t>(data.labels[i]));
    if (s < per_class) {
      ++s;
      rows.push_back(static_cast<Eigen::Index>(i));
    }
  }
  GlobalDataset out;
  out.split = data.split;
  out.image_rows = data.image_rows;
  out.image_cols = data.image_cols;
  out.features = data.features(rows, Eigen::placeholders::all);
  for (auto r : rows) out.labels.push_back(data.labels[static_cast<std::size_t>(r)]);
  return out;
}

}  // namespace rccpfl
