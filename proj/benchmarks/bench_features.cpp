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

#include <benchmark/benchmark.h>

#include "rccpfl/features.hpp"
#include "rccpfl/seed.hpp"

namespace {

void BM_HogBatch(benchmark::State& state) {
  auto rng = rccpfl::make_rng(2, "bench");
  std::uniform_real_distribution<double> u;
  rccpfl::FeatureMatrix images(256, 28 * 28);
  for (Eigen::Index i = 0; i < images.size(); ++i) images.data()[i] = u(rng);
  rccpfl::HogParams params;
  params.cell_size = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rccpfl::hog_features(images, 28, 28, params));
  }
  state.SetItemsProcessed(state.iterations() * images.rows());
}
BENCHMARK(BM_HogBatch)->Arg(7)->Arg(14);

}  // namespace
