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

#include "rccpfl/harness.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "rccpfl/features.hpp"
#include "rccpfl/ledger.hpp"
#include "rccpfl/metrics.hpp"
#include "rccpfl/parallel.hpp"
#include "rccpfl/seed.hpp"
#include "rccpfl/similarity.hpp"

namespace rccpfl {
namespace {

namespace fs = std::filesystem;

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError(stage, e.what());
  }
}

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string idx_path(const std::string& dir, const std::string& stem) {
  const fs::path plain = fs::path(dir) / stem;
  fs::path gz = plain;
  gz += ".gz";
  if (fs::exists(gz)) return gz.string();
  return plain.string();
}

bool needs_seeded_data(const ExperimentSpec& spec) {
  return spec.dataset == DatasetKind::synthetic;
}

std::vector<std::size_t> ci_labels(const ClusterAssignment& ci) { return ci.labels(); }

void write_rounds(std::ostream& out, std::size_t repeat, const RunResult& r) {
  const auto name = to_string(r.algorithm);
  for (const auto& round : r.metrics.rounds) {
    for (const auto& g : round.clusters) {
      out << repeat << ',' << name << ',' << round.round << ",cluster," << g.index << ','
          << g.users << ',' << num(g.loss) << ',' << num(g.accuracy) << '\n';
    }
    for (const auto& g : round.tasks) {
      out << repeat << ',' << name << ',' << round.round << ",task," << g.index << ','
          << g.users << ',' << num(g.loss) << ',' << num(g.accuracy) << '\n';
    }
  }
}

std::string run_dir(const ExperimentSpec& spec, std::size_t repeat) {
  return (fs::path(spec.output_dir) / ("run_" + std::to_string(repeat))).string();
}

void write_repeat_inputs(const ExperimentSpec& spec, std::size_t repeat,
                         const BuiltFederation& built) {
  const auto dir = run_dir(spec, repeat);
  fs::create_directories(dir);
  std::ostringstream partition;
  write_partition_report(partition, built.partition, spec.tasks);
  write_file_atomic(dir + "/partition.csv", partition.str());
  std::ostringstream noise;
  write_noise_report(noise, built.noise_reports);
  write_file_atomic(dir + "/noise.csv", noise.str());
}

void write_run_outputs(const ExperimentSpec& spec, const RunRecord& record) {
  const auto dir = run_dir(spec, record.repeat);
  const auto name = to_string(record.result.algorithm);
  std::ostringstream ci;
  write_assignment_csv(ci, record.result.ci);
  write_file_atomic(dir + "/" + name + "_ci.csv", ci.str());
  std::ostringstream ledger;
  record.result.ledger.write_csv(ledger);
  write_file_atomic(dir + "/" + name + "_ledger.csv", ledger.str());
  if (record.result.similarity) {
    std::ostringstream sim;
    write_matrix_csv(sim, record.result.similarity->values());
    write_file_atomic(dir + "/" + name + "_similarity.csv", sim.str());
  }
}

}  // namespace

RepeatSeeds repeat_seeds(std::uint64_t master_seed, std::size_t repeat) {
  RepeatSeeds s;
  s.repeat = derive_seed(master_seed, "repeat", repeat);
  s.data = derive_seed(s.repeat, "stage-data");
  s.partition = derive_seed(s.repeat, "stage-partition");
  s.noise = derive_seed(s.repeat, "stage-noise");
  s.run = derive_seed(s.repeat, "stage-run");
  return s;
}

DataSplits load_data(const ExperimentSpec& spec, const RepeatSeeds& seeds) {
  return in_stage("load", [&] {
    DataSplits d;
    const int C = spec.tasks.num_classes();
    if (spec.dataset == DatasetKind::synthetic) {
      SyntheticConfig cfg = spec.synthetic;
      cfg.seed = seeds.data;
      d.train = generate_synthetic(spec.tasks, cfg, Split::train);
      cfg.samples_per_class = spec.synthetic_test_per_class;
      d.test = generate_synthetic(spec.tasks, cfg, Split::test);
    } else {
      if (spec.data_dir.empty()) throw ConfigError("data_dir is required for IDX datasets");
      d.train = load_idx_dataset(idx_path(spec.data_dir, "train-images-idx3-ubyte"),
                                 idx_path(spec.data_dir, "train-labels-idx1-ubyte"),
                                 Split::train);
      d.test = load_idx_dataset(idx_path(spec.data_dir, "t10k-images-idx3-ubyte"),
                                idx_path(spec.data_dir, "t10k-labels-idx1-ubyte"), Split::test);
    }
    if (spec.train_per_class > 0) d.train = subsample_per_class(d.train, C, spec.train_per_class);
    if (spec.test_per_class > 0) d.test = subsample_per_class(d.test, C, spec.test_per_class);
    d.train.validate(C);
    d.test.validate(C);
    return d;
  });
}

BuiltFederation build_federation(const ExperimentSpec& spec, const DataSplits& data,
                                 const RepeatSeeds& seeds) {
  BuiltFederation built{Federation{spec.tasks, {}, {}}, {}, {}};
  built.partition = in_stage("partition", [&] {
    PartitionConfig cfg = spec.partition;
    cfg.seed = seeds.partition;
    return partition_to_users(data.train, spec.tasks, cfg);
  });

  // The partition keeps the clean labels for its report.
  std::vector<UserDataset> users = built.partition.users;
  in_stage("noise", [&] {
    if (spec.noise.alpha == 0.0 && spec.tasks.num_tasks() < 2) return;
    NoiseConfig cfg = spec.noise;
    cfg.seed = seeds.noise;
    built.noise_reports.resize(users.size());
    for (std::size_t k = 0; k < users.size(); ++k) {
      users[k] = inject_noise(users[k], spec.tasks, cfg, &built.noise_reports[k]);
    }
  });

  const auto map = [&](const GlobalDataset& like, const FeatureMatrix& x) {
    if (spec.feature == FeatureMapKind::identity) return identity_features(x);
    if (like.image_rows == 0 || like.image_cols == 0) {
      throw ConfigError("HoG features need image data");
    }
    return hog_features(x, like.image_rows, like.image_cols, spec.hog);
  };

  auto& fed = built.federation;
  fed.clients.resize(users.size());
  in_stage("features", [&] {
    parallel_for(users.size(), spec.run.threads, [&](std::size_t k) {
      auto& c = fed.clients[k];
      const auto& u = users[k];
      c.user_id = u.user_id;
      c.intended_task = u.intended_task;
      c.train_labels = u.labels;
      c.mapped_features = map(data.train, u.features);
      c.train_features = spec.model_input == ModelInput::raw ? u.features : c.mapped_features;
    });
    for (std::size_t m = 0; m < spec.tasks.num_tasks(); ++m) {
      const auto test = restrict_to_task(data.test, spec.tasks, m);
      TestSet t;
      t.labels = test.labels;
      t.features = spec.model_input == ModelInput::raw ? test.features : map(data.test, test.features);
      fed.task_tests.push_back(std::move(t));
    }
  });
  return built;
}

RunConfig repeat_run_config(const ExperimentSpec& spec, const Federation& fed,
                            const RepeatSeeds& seeds, Algorithm algorithm) {
  RunConfig cfg = spec.run;
  cfg.algorithm = algorithm;
  cfg.master_seed = seeds.run;
  if (!fed.clients.empty()) {
    cfg.arch.input_dim = static_cast<std::size_t>(fed.clients.front().train_features.cols());
  }
  cfg.arch.output_dim = static_cast<std::size_t>(fed.task_spec.num_classes());
  return cfg;
}

ComparisonResult compare_algorithms(const ExperimentSpec& spec,
                                    const std::vector<Algorithm>& algorithms) {
  if (algorithms.empty()) throw StageError("config", "no algorithms requested");
  const bool write = !spec.output_dir.empty();
  if (write) {
    in_stage("output", [&] { fs::create_directories(spec.output_dir); });
  }

  ComparisonResult out;
  std::optional<DataSplits> shared;
  if (!needs_seeded_data(spec)) shared = load_data(spec, RepeatSeeds{});

  std::ostringstream rounds;
  rounds << "run,algorithm,round,scope,index,users,loss,accuracy\n";
  for (std::size_t r = 0; r < spec.repeats; ++r) {
    const auto seeds = repeat_seeds(spec.run.master_seed, r);
    const DataSplits data = shared ? *shared : load_data(spec, seeds);
    const auto built = build_federation(spec, data, seeds);
    if (write) write_repeat_inputs(spec, r, built);
    const auto truth = built.federation.ground_truth();
    for (const auto algorithm : algorithms) {
      RunRecord record;
      record.repeat = r;
      record.result = in_stage("train", [&] {
        return run_algorithm(built.federation,
                             repeat_run_config(spec, built.federation, seeds, algorithm));
      });
      const auto a = ci_labels(record.result.ci);
      const auto b = ci_labels(truth);
      record.ari = adjusted_rand_index(a, b);
      write_rounds(rounds, r, record.result);
      if (write) in_stage("output", [&] { write_run_outputs(spec, record); });
      out.runs.push_back(std::move(record));
    }
  }

  for (const auto algorithm : algorithms) {
    SummaryRow row;
    row.algorithm = algorithm;
    for (const auto& run : out.runs) {
      if (run.result.algorithm == algorithm) {
        row.accuracies.push_back(run.result.metrics.mean_user_accuracy);
      }
    }
    row.mean_accuracy = mean(row.accuracies);
    row.std_accuracy = sample_stddev(row.accuracies);
    out.summary.push_back(std::move(row));
  }

  if (write) {
    in_stage("output", [&] {
      std::ostringstream runs;
      runs << "run,algorithm,mean_user_accuracy,sample_weighted_accuracy,mean_user_loss,"
              "ari,reassociation_rounds,reinit_attempts\n";
      for (const auto& rec : out.runs) {
        const auto& m = rec.result.metrics;
        runs << rec.repeat << ',' << to_string(rec.result.algorithm) << ','
             << num(m.mean_user_accuracy) << ',' << num(m.sample_weighted_accuracy) << ','
             << num(m.mean_user_loss) << ',' << num(rec.ari) << ',' << m.reassociation_rounds
             << ',' << m.reinit_attempts << '\n';
      }
      std::ostringstream summary;
      summary << "algorithm,repeats,mean_accuracy,std_accuracy\n";
      for (const auto& row : out.summary) {
        summary << to_string(row.algorithm) << ',' << row.accuracies.size() << ','
                << num(row.mean_accuracy) << ',' << num(row.std_accuracy) << '\n';
      }
      const fs::path dir(spec.output_dir);
      write_file_atomic((dir / "rounds.csv").string(), rounds.str());
      write_file_atomic((dir / "runs.csv").string(), runs.str());
      write_file_atomic((dir / "summary.csv").string(), summary.str());
    });
  }
  return out;
}

ComparisonResult run_experiment(const ExperimentSpec& spec) {
  return compare_algorithms(spec, {spec.run.algorithm});
}

std::vector<SimilarityRecord> run_similarity(const ExperimentSpec& spec) {
  const bool write = !spec.output_dir.empty();
  std::optional<DataSplits> shared;
  if (!needs_seeded_data(spec)) shared = load_data(spec, RepeatSeeds{});

  std::vector<SimilarityRecord> out;
  std::ostringstream table;
  table << "run,ari\n";
  for (std::size_t r = 0; r < spec.repeats; ++r) {
    const auto seeds = repeat_seeds(spec.run.master_seed, r);
    const DataSplits data = shared ? *shared : load_data(spec, seeds);
    const auto built = build_federation(spec, data, seeds);
    std::vector<FeatureMatrix> mapped;
    for (const auto& c : built.federation.clients) mapped.push_back(c.mapped_features);
    auto clustering = in_stage("similarity", [&] {
      return cluster_by_data_similarity(mapped, spec.tasks.num_tasks(), spec.run.eigen_floor,
                                        spec.run.threads);
    });
    SimilarityRecord rec;
    rec.repeat = r;
    rec.similarity = std::move(clustering.similarity);
    rec.ci = std::move(clustering.assignment);
    rec.ground_truth = built.federation.ground_truth();
    const auto a = ci_labels(rec.ci);
    const auto b = ci_labels(rec.ground_truth);
    rec.ari = adjusted_rand_index(a, b);
    table << r << ',' << num(rec.ari) << '\n';
    if (write) {
      in_stage("output", [&] {
        write_repeat_inputs(spec, r, built);
        const auto dir = run_dir(spec, r);
        std::ostringstream sim;
        write_matrix_csv(sim, rec.similarity.values());
        write_file_atomic(dir + "/similarity.csv", sim.str());
        std::ostringstream ci;
        write_assignment_csv(ci, rec.ci);
        write_file_atomic(dir + "/ci.csv", ci.str());
      });
    }
    out.push_back(std::move(rec));
  }
  if (write) {
    in_stage("output", [&] {
      write_file_atomic((fs::path(spec.output_dir) / "similarity_summary.csv").string(),
                        table.str());
    });
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace rccpfl
