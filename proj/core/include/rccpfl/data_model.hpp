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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rccpfl {

/// Samples are rows.
using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Label = int;

/// Disjoint label subsets over the global class set {0..C-1}. Task m is the
/// m-th entry of `tasks`.
class TaskSpec {
 public:
  /// Throws ConfigError unless the tasks are non-empty, pairwise disjoint and
  /// every label is below `num_classes`.
  TaskSpec(int num_classes, std::vector<std::vector<Label>> tasks);

  int num_classes() const noexcept { return num_classes_; }
  std::size_t num_tasks() const noexcept { return tasks_.size(); }
  const std::vector<Label>& task(std::size_t m) const { return tasks_.at(m); }
  const std::vector<std::vector<Label>>& tasks() const noexcept {
    return tasks_;
  }

  /// Task owning `label`, or nullopt for labels outside every task.
  std::optional<std::size_t> task_of(Label label) const;
  bool in_task(Label label, std::size_t m) const;

  /// Sorted union of the labels of every task except `m`.
  std::vector<Label> labels_outside(std::size_t m) const;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;

 private:
  int num_classes_;
  std::vector<std::vector<Label>> tasks_;
  std::vector<int> owner_;  // label -> task index or -1
};

enum class Split { train, test };

struct GlobalDataset {
  FeatureMatrix features;
  std::vector<Label> labels;
  Split split = Split::train;
  // Image geometry when rows are flattened row-major images; zero otherwise.
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept {
    return static_cast<std::size_t>(features.cols());
  }
  /// Throws ConsistencyError if the invariants (n > 0, p > 0, rows match
  /// labels, labels in [0, num_classes)) do not hold.
  void validate(int num_classes) const;
};

struct UserDataset {
  std::size_t user_id = 0;
  FeatureMatrix features;
  std::vector<Label> labels;
  std::size_t intended_task = 0;
  std::vector<bool> flip_mask;
  // Row indices into the global dataset this user's samples came from.
  std::vector<std::size_t> sample_ids;

  std::size_t size() const noexcept { return labels.size(); }
};

struct PartitionConfig {
  std::size_t num_users = 25;
  double dirichlet_concentration = 2.0;
  double minority_fraction = 0.05;
  std::uint64_t seed = 0;
};

struct Partition {
  std::vector<UserDataset> users;
  std::vector<std::string> warnings;
};

/// Reads an IDX image file (magic 0x00000803) and its label file (0x00000801).
/// Gzip-compressed files are decompressed transparently. Pixels are scaled to
/// [0, 1].
GlobalDataset load_idx_dataset(const std::string& images_path,
                               const std::string& labels_path,
                               Split split = Split::train);

/// In-memory variant of load_idx_dataset over raw (uncompressed) IDX bytes.
GlobalDataset parse_idx_dataset(std::span<const std::uint8_t> images,
                                std::span<const std::uint8_t> labels,
                                Split split = Split::train);

struct SyntheticConfig {
  std::size_t samples_per_class = 100;
  std::size_t feature_dim = 16;
  double class_separation = 4.0;
  std::uint64_t seed = 0;
};

/// Isotropic unit-variance Gaussian blob per class. Class means have norm
/// `class_separation` and depend only on the seed, so train and test splits
/// drawn with the same seed share them.
GlobalDataset generate_synthetic(const TaskSpec& task_spec,
                                 const SyntheticConfig& cfg,
                                 Split split = Split::train);

/// Intended task of every user: users are split into equal consecutive blocks
/// per task, remainder users go round-robin to the first tasks.
std::vector<std::size_t> assign_tasks(std::size_t num_users,
                                      std::size_t num_tasks);

/// Non-IID partition: per-class Dirichlet proportions over each task's users,
/// then minority samples from the other tasks. Sampling is without
/// replacement across all users.
Partition partition_to_users(const GlobalDataset& data,
                             const TaskSpec& task_spec,
                             const PartitionConfig& cfg);

/// Per-user n_k, intended task, and class histogram.
void write_partition_report(std::ostream& out, const Partition& partition,
                            const TaskSpec& task_spec);

/// Rows of `data` whose label belongs to task `m`.
GlobalDataset restrict_to_task(const GlobalDataset& data,
                               const TaskSpec& task_spec, std::size_t m);

/// Keeps at most `per_class` samples of each class, in original order.
GlobalDataset subsample_per_class(const GlobalDataset& data, int num_classes,
                                  std::size_t per_class);

}  // namespace rccpfl
