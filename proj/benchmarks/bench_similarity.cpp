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

#include <vector>

#include <benchmark/benchmark.h>

#include "rccpfl/seed.hpp"
#include "rccpfl/similarity.hpp"

namespace {

std::vector<rccpfl::FeatureMatrix> random_users(std::size_t users, std::size_t n, std::size_t d) {
  auto rng = rccpfl::make_rng(1, "bench");
  std::normal_distribution<double> g;
  std::vector<rccpfl::FeatureMatrix> out;
  for (std::size_t k = 0; k < users; ++k) {
    rccpfl::FeatureMatrix x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    out.push_back(std::move(x));
  }
  return out;
}

void BM_Spectrum(benchmark::State& state) {
  const auto users = random_users(1, 320, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rccpfl::compute_spectrum(users[0]));
}
BENCHMARK(BM_Spectrum)->Arg(36)->Arg(144)->Arg(784);

void BM_SimilarityMatrix(benchmark::State& state) {
  const auto users = random_users(static_cast<std::size_t>(state.range(0)), 320, 36);
  std::vector<rccpfl::Spectrum> spectra;
  for (const auto& u : users) spectra.push_back(rccpfl::compute_spectrum(u));
  for (auto _ : state) benchmark::DoNotOptimize(rccpfl::similarity_matrix(spectra));
}
BENCHMARK(BM_SimilarityMatrix)->Arg(10)->Arg(25)->Arg(50);

void BM_Hac(benchmark::State& state) {
  const auto users = random_users(static_cast<std::size_t>(state.range(0)), 64, 8);
  std::vector<rccpfl::Spectrum> spectra;
  for (const auto& u : users) spectra.push_back(rccpfl::compute_spectrum(u));
  const auto r = rccpfl::similarity_matrix(spectra);
  for (auto _ : state) benchmark::DoNotOptimize(rccpfl::hac_cluster(r, 5));
}
BENCHMARK(BM_Hac)->Arg(25)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
