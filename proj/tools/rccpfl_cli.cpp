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

// rccpfl: run, compare or inspect clustered federated learning experiments.
//
//   rccpfl run        --spec configs/mnist_two.ini --output out/
//   rccpfl compare    --spec configs/mnist_two.ini --algorithms rcc_pfl,ifca_pfl
//   rccpfl similarity --spec configs/mnist_five.ini --seed 7 --repeats 1

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rccpfl/error.hpp"
#include "rccpfl/experiment_spec.hpp"
#include "rccpfl/harness.hpp"

namespace {

struct Options {
  std::string spec_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeats;
  std::optional<std::size_t> threads;
  std::string algorithms;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("-s,--spec", opt.spec_path, "experiment spec file")->required();
  cmd->add_option("-o,--output", opt.output_dir, "output directory (overrides the spec file)");
  cmd->add_option("--seed", opt.seed, "master seed override");
  cmd->add_option("-r,--repeats", opt.repeats, "repeat count override")
      ->check(CLI::PositiveNumber);
  cmd->add_option("-j,--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
}

rccpfl::ExperimentSpec load(const Options& opt) {
  rccpfl::ExperimentSpec spec;
  try {
    spec = rccpfl::load_experiment_spec(opt.spec_path);
  } catch (const rccpfl::Error& e) {
    throw rccpfl::StageError("config", e.what());
  }
  if (!opt.output_dir.empty()) spec.output_dir = opt.output_dir;
  if (opt.seed) spec.run.master_seed = *opt.seed;
  if (opt.repeats) spec.repeats = *opt.repeats;
  if (opt.threads) spec.run.threads = *opt.threads;
  return spec;
}

void print_summary(const rccpfl::ComparisonResult& result) {
  std::printf("%-14s %8s %10s %10s\n", "algorithm", "repeats", "accuracy", "std");
  for (const auto& row : result.summary) {
    std::printf("%-14s %8zu %10.4f %10.4f\n", rccpfl::to_string(row.algorithm).c_str(),
                row.accuracies.size(), row.mean_accuracy, row.std_accuracy);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustered personalized federated learning simulator"};
  app.require_subcommand(1);
  Options opt;

  auto* run = app.add_subcommand("run", "run the spec's algorithm for every repeat");
  add_common(run, opt);
  auto* compare = app.add_subcommand("compare", "run several algorithms on shared data");
  add_common(compare, opt);
  compare->add_option("-a,--algorithms", opt.algorithms,
                      "comma-separated list (default: the spec's list)");
  auto* similarity = app.add_subcommand("similarity", "emit R and ci only, no training");
  add_common(similarity, opt);

  CLI11_PARSE(app, argc, argv);

  try {
    auto spec = load(opt);
    if (*run) {
      print_summary(rccpfl::run_experiment(spec));
    } else if (*compare) {
      std::vector<rccpfl::Algorithm> algorithms = spec.algorithms;
      if (!opt.algorithms.empty()) {
        algorithms.clear();
        std::stringstream in(opt.algorithms);
        std::string item;
        try {
          while (std::getline(in, item, ',')) algorithms.push_back(rccpfl::parse_algorithm(item));
        } catch (const rccpfl::Error& e) {
          throw rccpfl::StageError("config", e.what());
        }
      }
      print_summary(rccpfl::compare_algorithms(spec, algorithms));
    } else {
      for (const auto& rec : rccpfl::run_similarity(spec)) {
        std::printf("run %zu ari %.6f clusters", rec.repeat, rec.ari);
        for (const auto size : rec.ci.sizes()) std::printf(" %zu", size);
        std::printf("\n");
      }
    }
  } catch (const rccpfl::StageError& e) {
    std::cerr << "error: stage=" << e.stage() << " message=\"" << e.what() << "\"\n";
    return 2;
  } catch (const rccpfl::Error& e) {
    std::cerr << "error: stage=unknown message=\"" << e.what() << "\"\n";
    return 2;
  }
  return 0;
}
