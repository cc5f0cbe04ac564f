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
#include <vector>

#include "rccpfl/data_model.hpp"

namespace rccpfl {

enum class NoiseKind { class_independent, class_dependent };

struct NoiseConfig {
  double alpha = 0.0;  // noisy fraction, in [0, 1)
  NoiseKind kind = NoiseKind::class_independent;
  std::uint64_t seed = 0;
};

/// Audit record of one user's corruption.
struct NoiseReport {
  std::size_t user_id = 0;
  std::vector<Label> source_labels;  // labels whose samples were flipped, in order
  Label target_label = -1;
  std::size_t flip_count = 0;
};

/// floor(alpha * n): the number of labels a user with n samples loses.
std::size_t flip_budget(double alpha, std::size_t n);

/// Flips floor(alpha * n_k) samples drawn uniformly from all of the user's
/// samples to a single label drawn uniformly from the other tasks' labels.
/// Throws ConfigError when there is only one task or alpha is outside [0, 1).
UserDataset inject_class_independent(const UserDataset& user,
                                     const TaskSpec& task_spec,
                                     const NoiseConfig& cfg,
                                     NoiseReport* report = nullptr);

/// Flips floor(alpha * n_k) samples concentrated on one label drawn uniformly
/// from the user's intended task. When that label runs out, the budget spills
/// to another intended-task label (uniform order), then to the user's other
/// labels, and only as a last resort to samples already carrying the target.
/// All flips map to one label drawn uniformly from the other tasks' labels.
UserDataset inject_class_dependent(const UserDataset& user,
                                   const TaskSpec& task_spec,
                                   const NoiseConfig& cfg,
                                   NoiseReport* report = nullptr);

/// Dispatches on cfg.kind. Each user draws from its own stream derived from
/// (cfg.seed, user_id), so users can be processed in any order.
UserDataset inject_noise(const UserDataset& user, const TaskSpec& task_spec,
                         const NoiseConfig& cfg, NoiseReport* report = nullptr);

void write_noise_report(std::ostream& out, std::span<const NoiseReport> reports);

}  // namespace rccpfl
