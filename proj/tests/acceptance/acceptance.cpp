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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Desk-scale experiments use the bundled configs and the
// MNIST subset under data/.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>

#include "rccpfl/error.hpp"
#include "rccpfl/harness.hpp"
#include "rccpfl/metrics.hpp"
#include "rccpfl/noise.hpp"
#include "rccpfl/seed.hpp"
#include "rccpfl/similarity.hpp"
#include "rccpfl/training.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace {

using namespace rccpfl;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

ExperimentSpec config(const std::string& name) {
  return load_experiment_spec(std::string(RCCPFL_CONFIG_DIR "/") + name + ".ini");
}

struct Prepared {
  BuiltFederation built;
  RepeatSeeds seeds;
};

Prepared prepare(const ExperimentSpec& spec, const DataSplits& data, std::size_t repeat) {
  const auto seeds = repeat_seeds(spec.run.master_seed, repeat);
  return {build_federation(spec, data, seeds), seeds};
}

RunResult run(const ExperimentSpec& spec, const Prepared& p, Algorithm algorithm) {
  return run_algorithm(p.built.federation,
                       repeat_run_config(spec, p.built.federation, p.seeds, algorithm));
}

// 1. Eigen-decomposition, cross eigenvalues, relevance and R against the
// closed-form oracle.
Outcome similarity_oracle() {
  std::mt19937_64 rng(20260101);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto inst = fixtures::random_similarity_instance(rng);
    std::vector<Spectrum> spectra;
    for (const auto& x : inst.users) spectra.push_back(compute_spectrum(x));
    const std::size_t K = spectra.size();
    for (std::size_t i = 0; i < K; ++i) {
      const auto& o = inst.oracle_spectra[i];
      for (std::size_t k = 0; k < o.values.size(); ++k) {
        worst = std::max(worst, std::abs(spectra[i].eigenvalues(static_cast<Eigen::Index>(k)) -
                                         o.values[k]));
      }
      for (std::size_t j = 0; j < K; ++j) {
        const auto est = estimate_cross_eigenvalues(spectra[i], spectra[j].eigenvectors);
        const auto want = oracle::cross_eigenvalues(o, inst.oracle_spectra[j]);
        for (std::size_t k = 0; k < want.size(); ++k) {
          worst = std::max(worst, std::abs(est(static_cast<Eigen::Index>(k)) - want[k]));
        }
        worst = std::max(worst, std::abs(relevance(spectra[i].eigenvalues, est) -
                                         oracle::relevance(o.values, want, kDefaultEigenFloor)));
      }
    }
    const auto r = similarity_matrix(spectra);
    const auto want = oracle::similarity(inst.oracle_spectra, kDefaultEigenFloor);
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) worst = std::max(worst, std::abs(r(i, j) - want[i][j]));
    }
  }
  return {worst <= 1e-9, fmt("200 instances, max deviation %.3g (tol 1e-9)", worst)};
}

// 2. Procedure 1 never looks at labels.
Outcome label_agnosticism() {
  auto spec = config("mnist_five");
  const auto data = load_data(spec, RepeatSeeds{});
  std::size_t checked = 0, mismatches = 0;
  for (std::size_t r = 0; r < kSeeds; ++r) {
    std::optional<SimilarityClustering> reference;
    for (auto kind : {NoiseKind::class_independent, NoiseKind::class_dependent}) {
      for (double alpha : {0.0, 0.1, 0.25, 0.5}) {
        spec.noise.kind = kind;
        spec.noise.alpha = alpha;
        const auto p = prepare(spec, data, r);
        std::vector<FeatureMatrix> mapped;
        for (const auto& c : p.built.federation.clients) mapped.push_back(c.mapped_features);
        auto clustering = cluster_by_data_similarity(mapped, spec.tasks.num_tasks(),
                                                     spec.run.eigen_floor);
        ++checked;
        if (!reference) {
          reference = std::move(clustering);
        } else if (!(clustering.assignment == reference->assignment) ||
                   clustering.similarity.values() != reference->similarity.values()) {
          ++mismatches;
        }
      }
    }
  }
  return {mismatches == 0,
          fmt("%zu noisy variants over %zu seeds, %zu differ from the clean ci", checked, kSeeds,
              mismatches)};
}

// 3. Exact task recovery on MNIST five tasks and bit-identical accuracy to the
// genie-aided clustering.
Outcome perfect_clustering() {
  auto spec = config("mnist_five");
  const auto data = load_data(spec, RepeatSeeds{});
  std::size_t perfect = 0, identical = 0, total = 0;
  for (auto kind : {NoiseKind::class_independent, NoiseKind::class_dependent}) {
    spec.noise.kind = kind;
    for (std::size_t r = 0; r < kSeeds; ++r) {
      const auto p = prepare(spec, data, r);
      const auto rcc = run(spec, p, Algorithm::rcc_pfl);
      const auto opt = run(spec, p, Algorithm::optimum);
      const auto truth = p.built.federation.ground_truth();
      ++total;
      if (adjusted_rand_index(rcc.ci.labels(), truth.labels()) == 1.0) ++perfect;
      if (rcc.metrics.mean_user_accuracy == opt.metrics.mean_user_accuracy &&
          rcc.metrics.user_accuracy == opt.metrics.user_accuracy) {
        ++identical;
      }
    }
  }
  return {perfect == total && identical == total,
          fmt("ARI=1 in %zu/%zu runs, accuracy bit-identical to optimum in %zu/%zu", perfect,
              total, identical, total)};
}

struct TwoTaskRuns {
  double rcc = 0, ifca = 0, single = 0;
};

TwoTaskRuns two_task_accuracies(NoiseKind kind, const std::vector<Algorithm>& algorithms) {
  auto spec = config("mnist_two");
  spec.noise.kind = kind;
  const auto data = load_data(spec, RepeatSeeds{});
  std::vector<double> rcc, ifca, single;
  for (std::size_t r = 0; r < kSeeds; ++r) {
    const auto p = prepare(spec, data, r);
    for (auto a : algorithms) {
      const double acc = run(spec, p, a).metrics.mean_user_accuracy;
      (a == Algorithm::rcc_pfl ? rcc : a == Algorithm::ifca_pfl ? ifca : single).push_back(acc);
    }
  }
  TwoTaskRuns out;
  if (!rcc.empty()) out.rcc = mean(rcc);
  if (!ifca.empty()) out.ifca = mean(ifca);
  if (!single.empty()) out.single = mean(single);
  return out;
}

TwoTaskRuns independent_two_task;

// 4. RCC-PFL ahead of IFCA-PFL and the single global model by two points.
Outcome ordering() {
  independent_two_task =
      two_task_accuracies(NoiseKind::class_independent,
                          {Algorithm::rcc_pfl, Algorithm::ifca_pfl, Algorithm::single_global});
  const auto& a = independent_two_task;
  const bool pass = a.rcc - a.ifca >= 0.02 && a.rcc - a.single >= 0.02;
  return {pass, fmt("mean accuracy rcc %.2f, ifca %.2f, single %.2f (margin >= 2 points)",
                    100 * a.rcc, 100 * a.ifca, 100 * a.single)};
}

// 5. Class-dependent noise hurts the single global model at least as much.
Outcome noise_asymmetry() {
  const auto dependent = two_task_accuracies(NoiseKind::class_dependent, {Algorithm::single_global});
  const double indep = independent_two_task.single;
  return {dependent.single <= indep,
          fmt("single_global mean accuracy: class-dependent %.2f, class-independent %.2f",
              100 * dependent.single, 100 * indep)};
}

// 6. Analytic gradients against central differences.
Outcome gradients() {
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> dim(1, 6), cls(2, 5), rows(1, 8);
  std::uniform_real_distribution<double> wd(0.0, 0.1);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    ModelArch arch;
    arch.kind = t % 2 ? ModelKind::mlp : ModelKind::logistic;
    arch.input_dim = static_cast<std::size_t>(dim(rng));
    arch.hidden_dim = static_cast<std::size_t>(dim(rng));
    arch.output_dim = static_cast<std::size_t>(cls(rng));
    auto w = init_weights(arch, static_cast<std::uint64_t>(t));
    w.params += 0.2 * fixtures::random_matrix(static_cast<std::size_t>(w.params.size()), 1, rng)
                          .reshaped();
    const auto n = static_cast<std::size_t>(rows(rng));
    const auto x = fixtures::random_matrix(n, arch.input_dim, rng);
    std::vector<Label> labels(n);
    std::uniform_int_distribution<int> lab(0, static_cast<int>(arch.output_dim) - 1);
    for (auto& l : labels) l = lab(rng);
    const double decay = wd(rng);

    const auto analytic = loss_and_gradient(w, x, labels, decay).gradient;
    Eigen::VectorXd numeric(analytic.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < w.params.size(); ++i) {
      auto plus = w, minus = w;
      plus.params(i) += h;
      minus.params(i) -= h;
      numeric(i) = (loss_and_gradient(plus, x, labels, decay).loss -
                    loss_and_gradient(minus, x, labels, decay).loss) /
                   (2 * h);
    }
    const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
    worst = std::max(worst, (analytic - numeric).norm() / scale);
  }
  return {worst < 1e-4, fmt("50 instances, max relative error %.3g (tol 1e-4)", worst)};
}

// 7. Budget, single foreign target, untouched features.
Outcome noise_exactness() {
  std::mt19937_64 rng(707);
  std::uniform_int_distribution<int> classes(2, 10), size(1, 120);
  std::uniform_real_distribution<double> alpha(0.0, 0.999);
  std::size_t failures = 0;
  for (int t = 0; t < 500; ++t) {
    const int C = classes(rng);
    std::vector<int> perm(static_cast<std::size_t>(C));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const int M = std::uniform_int_distribution<int>(2, C)(rng);
    std::vector<std::vector<Label>> tasks(static_cast<std::size_t>(M));
    for (int i = 0; i < C; ++i) tasks[static_cast<std::size_t>(i % M)].push_back(perm[static_cast<std::size_t>(i)]);
    const TaskSpec ts(C, tasks);

    UserDataset u;
    u.user_id = static_cast<std::size_t>(t);
    u.intended_task = static_cast<std::size_t>(std::uniform_int_distribution<int>(0, M - 1)(rng));
    const auto n = static_cast<std::size_t>(size(rng));
    u.features = fixtures::random_matrix(n, 3, rng);
    std::uniform_int_distribution<int> lab(0, C - 1);
    for (std::size_t i = 0; i < n; ++i) u.labels.push_back(lab(rng));
    u.flip_mask.assign(n, false);
    const NoiseConfig cfg{alpha(rng), t % 2 ? NoiseKind::class_dependent : NoiseKind::class_independent,
                          static_cast<std::uint64_t>(t)};
    const auto out = inject_noise(u, ts, cfg);

    const auto flips = static_cast<std::size_t>(std::count(out.flip_mask.begin(), out.flip_mask.end(), true));
    std::set<Label> targets;
    bool ok = flips == flip_budget(cfg.alpha, n) && out.features == u.features;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.flip_mask[i]) targets.insert(out.labels[i]);
      else ok &= out.labels[i] == u.labels[i];
    }
    ok &= targets.size() <= 1;
    if (!targets.empty()) ok &= !ts.in_task(*targets.begin(), u.intended_task);
    if (!ok) ++failures;
  }
  return {failures == 0, fmt("500 configurations, %zu violations", failures)};
}

// 8. One-shot clustering cost for RCC-PFL, linear probe cost for IFCA-PFL.
Outcome communication() {
  std::vector<std::string> problems;
  std::size_t checks = 0;
  for (const char* name : {"synthetic_five", "mnist_two"}) {
    auto spec = config(name);
    spec.train_per_class = 200;
    const auto seeds = repeat_seeds(spec.run.master_seed, 0);
    const auto data = load_data(spec, seeds);
    const Prepared p{build_federation(spec, data, seeds), seeds};
    const auto& fed = p.built.federation;

    auto cfg = repeat_run_config(spec, fed, seeds, Algorithm::rcc_pfl);
    cfg.global_rounds = 1;
    const auto g1 = run_rcc_pfl(fed, cfg);
    cfg.global_rounds = 50;
    const auto g50 = run_rcc_pfl(fed, cfg);
    for (auto cat : {CommCategory::eigenvector_exchange, CommCategory::relevance_report}) {
      ++checks;
      if (!(g1.ledger.total(cat) == g50.ledger.total(cat)) ||
          g1.ledger.total(cat).uploaded == 0) {
        problems.push_back(std::string(name) + " rcc " + to_string(cat));
      }
    }

    const std::uint64_t K = fed.num_users(), M = fed.num_tasks();
    const std::uint64_t P = cfg.arch.parameter_count();
    for (std::size_t patience : {std::size_t{1000}, spec.run.ifca_freeze_patience}) {
      auto icfg = repeat_run_config(spec, fed, seeds, Algorithm::ifca_pfl);
      icfg.global_rounds = 12;
      icfg.ifca_freeze_patience = patience;
      const auto r = run_ifca_pfl(fed, icfg);
      const auto base = r.ledger.round_total(0, CommCategory::model_probe).downloaded;
      std::uint64_t reassociations = 0;
      for (std::size_t round = 1; round <= icfg.global_rounds; ++round) {
        if (r.metrics.rounds[round - 1].reassociated) ++reassociations;
        ++checks;
        if (r.ledger.cumulative(round, CommCategory::model_probe).downloaded !=
            base + reassociations * K * (M - 1) * P) {
          problems.push_back(std::string(name) + " ifca round " + std::to_string(round));
        }
      }
      // Before the freeze every round re-associates, so the count is the
      // round index itself.
      for (std::size_t round = 1; round <= reassociations; ++round) {
        ++checks;
        if (!r.metrics.rounds[round - 1].reassociated) {
          problems.push_back(std::string(name) + " ifca gap before freeze");
        }
      }
    }
  }
  return {problems.empty(), fmt("%zu exact integer checks, %zu failed%s%s", checks, problems.size(),
                                problems.empty() ? "" : ": ",
                                problems.empty() ? "" : problems.front().c_str())};
}

// 9. Re-association output is always a valid, reproducible assignment.
Outcome reassociation_validity() {
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<int> dims(1, 10);
  std::size_t bad = 0;
  for (int t = 0; t < 200; ++t) {
    const int M = dims(rng);
    const int K = M + dims(rng) - 1;
    Eigen::MatrixXd losses(K, M);
    // Coarse values on half of the tables to force ties.
    std::uniform_int_distribution<int> coarse(0, 3);
    std::uniform_real_distribution<double> fine(0.0, 5.0);
    for (Eigen::Index i = 0; i < losses.size(); ++i) {
      losses.data()[i] = t % 2 ? coarse(rng) * 0.5 : fine(rng);
    }
    const auto ci = reassociate_from_losses(losses);
    const auto again = reassociate_from_losses(losses);
    const Eigen::MatrixXi m = ci.matrix();
    const bool ok = (m.rowwise().sum().array() == 1).all() && (m.colwise().sum().array() >= 1).all() &&
                    ci == again;
    if (!ok) ++bad;
  }
  // The same rule driven by real models, before and after training starts.
  const auto fed = fixtures::blob_federation(3, 3, 20, 4);
  for (int t = 0; t < 20; ++t) {
    const auto cfg = fixtures::small_run(fed, Algorithm::ifca_pfl, 1, static_cast<std::uint64_t>(t));
    auto models_for = [&](std::size_t attempt) {
      std::vector<ModelWeights> ms;
      for (std::uint64_t m = 0; m < 3; ++m) {
        ms.push_back(init_weights(cfg.arch, derive_seed(static_cast<std::uint64_t>(t), "acc", attempt, m)));
      }
      return ms;
    };
    for (bool started : {false, true}) {
      const auto a = cluster_reassociation(fed, models_for(0), started, models_for, 20);
      const auto b = cluster_reassociation(fed, models_for(0), started, models_for, 20);
      if (!a.ci.all_clusters_nonempty() || !(a.ci == b.ci)) ++bad;
    }
  }
  return {bad == 0, fmt("200 loss tables + 40 model-driven calls, %zu invalid or unstable", bad)};
}

// 10. Per-cluster loss trajectories on MNIST three tasks.
Outcome loss_trajectories() {
  auto spec = config("mnist_three");
  const auto out_dir = std::filesystem::temp_directory_path() / "rccpfl_acceptance_three";
  std::filesystem::remove_all(out_dir);
  spec.output_dir = out_dir.string();
  const auto result = compare_algorithms(
      spec, {Algorithm::rcc_pfl, Algorithm::optimum, Algorithm::ifca_pfl});

  std::size_t coincide = 0, ifca_higher = 0, ifca_higher_every_task = 0;
  for (std::size_t r = 0; r < kSeeds; ++r) {
    const auto& rcc = result.runs[3 * r].result;
    const auto& opt = result.runs[3 * r + 1].result;
    const auto& ifca = result.runs[3 * r + 2].result;
    bool same = rcc.metrics.rounds.size() == opt.metrics.rounds.size();
    for (std::size_t g = 0; same && g < rcc.metrics.rounds.size(); ++g) {
      const auto& a = rcc.metrics.rounds[g].clusters;
      const auto& b = opt.metrics.rounds[g].clusters;
      for (std::size_t m = 0; m < a.size(); ++m) same &= a[m].loss == b[m].loss;
    }
    if (same) ++coincide;
    if (ifca.metrics.mean_user_loss >= rcc.metrics.mean_user_loss) ++ifca_higher;
    bool every = true;
    for (std::size_t t = 0; t < spec.tasks.num_tasks(); ++t) {
      every &= ifca.metrics.rounds.back().tasks[t].loss >= rcc.metrics.rounds.back().tasks[t].loss;
    }
    if (every) ++ifca_higher_every_task;
  }

  // The per-cluster rows must be in the emitted CSV.
  std::ifstream csv(out_dir / "rounds.csv");
  std::string line;
  std::size_t cluster_rows = 0;
  while (std::getline(csv, line)) {
    if (line.find(",cluster,") != std::string::npos) ++cluster_rows;
  }
  const std::size_t expected_rows = kSeeds * 3 * spec.run.global_rounds * spec.tasks.num_tasks();
  std::filesystem::remove_all(out_dir);

  const bool pass = coincide == kSeeds && ifca_higher >= 4 && cluster_rows == expected_rows;
  return {pass, fmt("rcc/optimum coincide in %zu/%zu seeds; ifca final loss >= rcc in %zu/%zu "
                    "(every task separately: %zu/%zu); %zu/%zu cluster rows in rounds.csv",
                    coincide, kSeeds, ifca_higher, kSeeds, ifca_higher_every_task, kSeeds,
                    cluster_rows, expected_rows)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;  // 0: no runtime bound
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "similarity oracle equivalence", 5, similarity_oracle},
      {2, "label-agnostic clustering", 0, label_agnosticism},
      {3, "perfect clustering at desk scale", 600, perfect_clustering},
      {4, "ordering reproduction", 900, ordering},
      {5, "noise-model asymmetry", 0, noise_asymmetry},
      {6, "gradient checks", 5, gradients},
      {7, "noise-injection exactness", 5, noise_exactness},
      {8, "communication accounting", 0, communication},
      {9, "re-association validity", 0, reassociation_validity},
      {10, "loss trajectories", 0, loss_trajectories},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.budget_seconds > 0 && secs > c.budget_seconds) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", c.budget_seconds);
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
