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
#include <string>
#include <vector>

#include "rccpfl/data_model.hpp"
#include "rccpfl/error.hpp"
#include "rccpfl/experiment_spec.hpp"
#include "rccpfl/noise.hpp"
#include "rccpfl/orchestrator.hpp"

namespace rccpfl {

/// A library error tagged with the pipeline stage that raised it
/// (load, partition, noise, features, train, similarity, output).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Seeds of one repeat. Every algorithm of a comparison uses the same ones.
struct RepeatSeeds {
  std::uint64_t repeat = 0;  // master seed of the repeat
  std::uint64_t data = 0;    // synthetic data only
  std::uint64_t partition = 0;
  std::uint64_t noise = 0;
  std::uint64_t run = 0;
};

RepeatSeeds repeat_seeds(std::uint64_t master_seed, std::size_t repeat);

struct DataSplits {
  GlobalDataset train;
  GlobalDataset test;
};

/// Loads (or generates) train and test data and applies the per-class caps.
DataSplits load_data(const ExperimentSpec& spec, const RepeatSeeds& seeds);

struct BuiltFederation {
  Federation federation;
  Partition partition;
  std::vector<NoiseReport> noise_reports;
};

/// Partition, noise injection and feature mapping for one repeat.
BuiltFederation build_federation(const ExperimentSpec& spec, const DataSplits& data,
                                 const RepeatSeeds& seeds);

/// The run configuration for one repeat: spec.run with the repeat's seed and
/// the model shape implied by the federation.
RunConfig repeat_run_config(const ExperimentSpec& spec, const Federation& fed,
                            const RepeatSeeds& seeds, Algorithm algorithm);

struct RunRecord {
  std::size_t repeat = 0;
  RunResult result;
  double ari = 0.0;  // final ci against the ground-truth tasks
};

struct SummaryRow {
  Algorithm algorithm = Algorithm::rcc_pfl;
  std::vector<double> accuracies;  // final mean per-user accuracy, per repeat
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation; 0 for one repeat
};

struct ComparisonResult {
  std::vector<RunRecord> runs;  // repeat-major, algorithms in request order
  std::vector<SummaryRow> summary;
};

/// Runs every algorithm on the same partitions, noise and initial weights for
/// spec.repeats repeats. Writes CSVs under spec.output_dir when it is set.
ComparisonResult compare_algorithms(const ExperimentSpec& spec,
                                    const std::vector<Algorithm>& algorithms);

/// compare_algorithms over spec.run.algorithm alone.
ComparisonResult run_experiment(const ExperimentSpec& spec);

struct SimilarityRecord {
  std::size_t repeat = 0;
  SimilarityMatrix similarity;
  ClusterAssignment ci;
  ClusterAssignment ground_truth;
  double ari = 0.0;
};

/// Data-similarity clustering only, no training.
std::vector<SimilarityRecord> run_similarity(const ExperimentSpec& spec);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace rccpfl
