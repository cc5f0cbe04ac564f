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

#include "rccpfl/noise.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "rccpfl/error.hpp"
#include "rccpfl/seed.hpp"

namespace rccpfl {
namespace {

void check(const UserDataset& user, const TaskSpec& task_spec,
           const NoiseConfig& cfg, NoiseKind expected) {
  if (cfg.kind != expected) throw ConfigError("noise: kind does not match operation");
  if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0)) {
    throw ConfigError("noise: alpha must lie in [0, 1)");
  }
  if (task_spec.num_tasks() < 2) {
    throw ConfigError("noise: task flipping needs at least two tasks");
  }
  if (user.intended_task >= task_spec.num_tasks()) {
    throw ConfigError("noise: intended task out of range");
  }
}

Label draw_target(const TaskSpec& task_spec, std::size_t task, Rng& rng) {
  const auto foreign = task_spec.labels_outside(task);
  std::uniform_int_distribution<std::size_t> pick(0, foreign.size() - 1);
  return foreign[pick(rng)];
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

}  // namespace

std::size_t flip_budget(double alpha, std::size_t n) {
  return static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
}

UserDataset inject_class_independent(const UserDataset& user,
                                     const TaskSpec& task_spec,
                                     const NoiseConfig& cfg,
                                     NoiseReport* report) {
  check(user, task_spec, cfg, NoiseKind::class_independent);
  auto rng = make_rng(cfg.seed, "noise-independent", user.user_id);
  UserDataset out = user;
  const std::size_t budget = flip_budget(cfg.alpha, user.size());
  const Label target = draw_target(task_spec, user.intended_task, rng);
  const auto picks = sample_without_replacement(user.size(), budget, rng);

  std::map<Label, bool> sources;
  for (auto i : picks) {
    sources[user.labels[i]] = true;
    out.labels[i] = target;
    out.flip_mask[i] = true;
  }
  if (report) {
    report->user_id = user.user_id;
    report->target_label = target;
    report->flip_count = budget;
    report->source_labels.clear();
    for (const auto& [label, _] : sources) report->source_labels.push_back(label);
  }
  return out;
}

UserDataset inject_class_dependent(const UserDataset& user,
                                   const TaskSpec& task_spec,
                                   const NoiseConfig& cfg, NoiseReport* report) {
  check(user, task_spec, cfg, NoiseKind::class_dependent);
  auto rng = make_rng(cfg.seed, "noise-dependent", user.user_id);
  UserDataset out = user;
  const std::size_t budget = flip_budget(cfg.alpha, user.size());
  const Label target = draw_target(task_spec, user.intended_task, rng);

  // Source order: a uniformly chosen intended label first, then the rest of
  // the intended task in uniform order, then the user's other labels, and
  // the target label itself last.
  std::vector<Label> intended = task_spec.task(user.intended_task);
  shuffle_in_place(intended, rng);
  std::vector<Label> others;
  for (Label y : user.labels) {
    if (!task_spec.in_task(y, user.intended_task) && y != target &&
        std::find(others.begin(), others.end(), y) == others.end()) {
      others.push_back(y);
    }
  }
  std::sort(others.begin(), others.end());
  shuffle_in_place(others, rng);
  std::vector<Label> order = intended;
  order.insert(order.end(), others.begin(), others.end());
  if (!task_spec.in_task(target, user.intended_task)) order.push_back(target);

  std::size_t remaining = budget;
  std::vector<Label> used;
  for (Label source : order) {
    if (remaining == 0) break;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < user.size(); ++i) {
      if (user.labels[i] == source) rows.push_back(i);
    }
    if (rows.empty()) continue;
    const std::size_t take = std::min(remaining, rows.size());
    for (auto p : sample_without_replacement(rows.size(), take, rng)) {
      out.labels[rows[p]] = target;
      out.flip_mask[rows[p]] = true;
    }
    used.push_back(source);
    remaining -= take;
  }
  if (report) {
    report->user_id = user.user_id;
    report->target_label = target;
    report->flip_count = budget - remaining;
    report->source_labels = used;
  }
  return out;
}

UserDataset inject_noise(const UserDataset& user, const TaskSpec& task_spec,
                         const NoiseConfig& cfg, NoiseReport* report) {
  return cfg.kind == NoiseKind::class_independent
             ? inject_class_independent(user, task_spec, cfg, report)
             : inject_class_dependent(user, task_spec, cfg, report);
}

void write_noise_report(std::ostream& out, std::span<const NoiseReport> reports) {
  out << "user,flip_count,target_label,source_labels\n";
  for (const auto& r : reports) {
    out << r.user_id << ',' << r.flip_count << ',' << r.target_label << ',';
    for (std::size_t i = 0; i < r.source_labels.size(); ++i) {
      if (i) out << ' ';
      out << r.source_labels[i];
    }
    out << '\n';
  }
}

}  // namespace rccpfl
