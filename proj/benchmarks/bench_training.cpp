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
#include "rccpfl/training.hpp"

namespace {

void BM_LocalEpoch(benchmark::State& state) {
  rccpfl::ModelArch arch;
  arch.kind = state.range(0) == 0 ? rccpfl::ModelKind::logistic : rccpfl::ModelKind::mlp;
  arch.input_dim = 784;
  arch.output_dim = 10;
  const auto w = rccpfl::init_weights(arch, 3);
  auto rng = rccpfl::make_rng(3, "bench");
  std::uniform_real_distribution<double> u;
  rccpfl::FeatureMatrix x(320, 784);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  std::vector<rccpfl::Label> y(320);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 10);
  rccpfl::TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(rccpfl::sgd_local_train(w, x, y, cfg, 1));
}
BENCHMARK(BM_LocalEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
