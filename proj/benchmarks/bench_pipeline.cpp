// Copyright 2026 The Panoptic Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "panoptic/fusion.hpp"
#include "panoptic/metrics.hpp"
#include "panoptic/semantic_ensemble.hpp"
#include "panoptic/synthgen.hpp"

namespace {

using namespace panoptic;

SceneSpec bench_scene(uint64_t seed) {
  SceneSpec spec;
  spec.width = 640;
  spec.height = 480;
  spec.n_things = 12;
  spec.thing_categories = {1, 2, 3, 4};
  spec.stuff_categories = {101, 102, 103};
  spec.rng_seed = seed;
  spec.n_semantic_models = 3;
  spec.degradation.boundary_erosion_px = 1;
  spec.degradation.false_positive_rate = 0.25;
  spec.degradation.semantic_flip_rate = 0.1;
  return spec;
}

ExpertRouting bench_routing() {
  ExpertRouting routing;
  routing.experts.push_back({"one", {1}, false});
  routing.experts.push_back({"rest", {}, true});
  return routing;
}

void BM_GenerateScene(benchmark::State& state) {
  uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_gt(bench_scene(seed++)));
  }
}
BENCHMARK(BM_GenerateScene);

void BM_Fuse640x480(benchmark::State& state) {
  const SceneSpec spec = bench_scene(7);
  const SyntheticScene scene = generate_gt(spec);
  const DegradedOutputs degraded = degrade(scene, spec, bench_routing());
  const auto instances = merge_expert_predictions(
      degraded.per_expert, bench_routing(), scene.categories);
  const LabelMap semantic =
      argmax_labels(ensemble_average(degraded.semantic_maps));
  const FusionParams params{0.25, 0.5, 64};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        fuse(instances, semantic, params, scene.categories));
  }
}
BENCHMARK(BM_Fuse640x480);

void BM_PqMatch640x480(benchmark::State& state) {
  const SceneSpec spec = bench_scene(9);
  const SyntheticScene scene = generate_gt(spec);
  const DegradedOutputs degraded = degrade(scene, spec, bench_routing());
  const auto instances = merge_expert_predictions(
      degraded.per_expert, bench_routing(), scene.categories);
  const LabelMap semantic =
      argmax_labels(ensemble_average(degraded.semantic_maps));
  const PanopticImage fused =
      fuse(instances, semantic, FusionParams{0.25, 0.5, 64}, scene.categories);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        pq_match(scene.panoptic, fused, scene.categories));
  }
}
BENCHMARK(BM_PqMatch640x480);

void BM_EnsembleAverage(benchmark::State& state) {
  const SceneSpec spec = bench_scene(11);
  const SyntheticScene scene = generate_gt(spec);
  const DegradedOutputs degraded = degrade(scene, spec, bench_routing());
  for (auto _ : state) {
    benchmark::DoNotOptimize(ensemble_average(degraded.semantic_maps));
  }
  state.SetItemsProcessed(state.iterations() * spec.width * spec.height *
                          degraded.semantic_maps.size());
}
BENCHMARK(BM_EnsembleAverage);

void BM_Miou640x480(benchmark::State& state) {
  const SceneSpec spec = bench_scene(13);
  const SyntheticScene scene = generate_gt(spec);
  const DegradedOutputs degraded = degrade(scene, spec, bench_routing());
  const LabelMap pred = argmax_labels(degraded.semantic_maps[0]);
  for (auto _ : state) {
    benchmark::DoNotOptimize(miou(scene.semantic_gt, pred));
  }
}
BENCHMARK(BM_Miou640x480);

}  // namespace
