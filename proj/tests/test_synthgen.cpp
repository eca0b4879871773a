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

#include "panoptic/synthgen.hpp"

#include <doctest.h>

#include "panoptic/fusion.hpp"
#include "panoptic/metrics.hpp"
#include "test_support.hpp"

using namespace panoptic;
using namespace panoptic::testing;

namespace {

SceneSpec small_spec(uint64_t seed) {
  SceneSpec spec;
  spec.width = 96;
  spec.height = 72;
  spec.n_things = 4;
  spec.thing_categories = {1, 2};
  spec.stuff_categories = {101, 102, 103};
  spec.rng_seed = seed;
  spec.n_stuff_regions = 3;
  spec.thing_min_extent = 20;
  spec.thing_max_extent = 32;
  spec.n_semantic_models = 2;
  return spec;
}

ExpertRouting all_routing() {
  ExpertRouting routing;
  routing.experts.push_back({"all", {}, true});
  return routing;
}

double fused_pq(const SyntheticScene& scene, const DegradedOutputs& degraded,
                const ExpertRouting& routing) {
  const auto merged = merge_expert_predictions(degraded.per_expert, routing,
                                               scene.categories);
  const LabelMap semantic =
      argmax_labels(ensemble_average(degraded.semantic_maps));
  const FusionParams params{0.25, 0.5, 0};
  const PanopticImage fused =
      fuse(merged, semantic, params, scene.categories);
  return pq_summarize(pq_match(scene.panoptic, fused, scene.categories)).pq;
}

}  // namespace

TEST_CASE("generation is deterministic under the seed") {
  const SceneSpec spec = small_spec(3);
  const SyntheticScene a = generate_gt(spec);
  const SyntheticScene b = generate_gt(spec);
  CHECK(a.panoptic == b.panoptic);
  CHECK(a.semantic_gt == b.semantic_gt);
  REQUIRE(a.instances.size() == b.instances.size());
  for (size_t i = 0; i < a.instances.size(); ++i) {
    CHECK(a.instances[i].mask == b.instances[i].mask);
  }

  const SyntheticScene c = generate_gt(small_spec(4));
  CHECK(a.panoptic.id_map != c.panoptic.id_map);

  const DegradedOutputs da = degrade(a, spec, all_routing());
  const DegradedOutputs db = degrade(b, spec, all_routing());
  CHECK(da.per_expert.at("all").size() == db.per_expert.at("all").size());
  for (size_t m = 0; m < da.semantic_maps.size(); ++m) {
    CHECK(da.semantic_maps[m].probs == db.semantic_maps[m].probs);
  }
}

TEST_CASE("generated scenes satisfy the panoptic invariants") {
  for (uint64_t seed = 0; seed < 8; ++seed) {
    const SyntheticScene scene = generate_gt(small_spec(seed));
    CHECK(validate_panoptic(scene.panoptic).ok());

    // Thing count matches the request.
    size_t things = 0;
    CategoryIndex index(scene.categories);
    for (const auto& seg : scene.panoptic.segments) {
      if (index.is_thing(seg.category_id)) ++things;
    }
    CHECK(things == 4);
    CHECK(scene.instances.size() == 4);
  }
}

TEST_CASE("stuff-only scenes evaluate to perfect PQ") {
  SceneSpec spec = small_spec(5);
  spec.n_things = 0;
  const SyntheticScene scene = generate_gt(spec);
  CHECK(scene.instances.empty());
  const PqSummary summary = pq_summarize(
      pq_match(scene.panoptic, scene.panoptic, scene.categories));
  CHECK(summary.pq == 1.0);
}

TEST_CASE("over-packed scenes fail loudly") {
  SceneSpec spec = small_spec(1);
  spec.width = 8;
  spec.height = 8;
  spec.n_things = 3;
  spec.thing_min_extent = 8;
  spec.thing_max_extent = 8;
  CHECK_THROWS_AS(generate_gt(spec), Error);
}

TEST_CASE("spec validation") {
  SceneSpec spec = small_spec(1);
  spec.stuff_categories.clear();
  CHECK_THROWS_AS(spec.validate(), Error);

  spec = small_spec(1);
  spec.thing_categories = {1, 1};
  CHECK_THROWS_AS(spec.validate(), Error);

  spec = small_spec(1);
  spec.degradation.drop_rate = 1.5;
  CHECK_THROWS_AS(spec.validate(), Error);

  spec = small_spec(1);
  spec.thing_min_extent = 0;
  CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("zero degradation reproduces the ground truth") {
  const SceneSpec spec = small_spec(6);
  const SyntheticScene scene = generate_gt(spec);
  const DegradedOutputs degraded = degrade(scene, spec, all_routing());

  const auto& preds = degraded.per_expert.at("all");
  REQUIRE(preds.size() == scene.instances.size());
  for (size_t i = 0; i < preds.size(); ++i) {
    CHECK(preds[i].mask == scene.instances[i].mask);
    CHECK(preds[i].score == 1.0);
    CHECK(preds[i].category_id == scene.instances[i].category_id);
  }
  // One-hot maps of the GT argmax back to the GT labels.
  for (const auto& map : degraded.semantic_maps) {
    CHECK(argmax_labels(map) == scene.semantic_gt);
  }
  CHECK(fused_pq(scene, degraded, all_routing()) == 1.0);
}

TEST_CASE("drop_rate one removes every prediction") {
  SceneSpec spec = small_spec(7);
  spec.degradation.drop_rate = 1.0;
  const SyntheticScene scene = generate_gt(spec);
  const DegradedOutputs degraded = degrade(scene, spec, all_routing());
  CHECK(degraded.per_expert.at("all").empty());
}

TEST_CASE("erosion geometry oracle") {
  // 1 px erosion of a 10x10 square leaves an 8x8 square; IoU = 64/100.
  const BinaryMask square = rect_mask(32, 32, 10, 10, 10, 10);
  const BinaryMask eroded = erode_mask(square, 1);
  CHECK(eroded.area() == 64);
  CHECK(tight_bbox(eroded) == BBox{11, 11, 8, 8});
  CHECK(mask_iou(square, eroded) == doctest::Approx(0.64).epsilon(1e-12));

  CHECK(erode_mask(square, 0) == square);
  CHECK(erode_mask(square, 2).area() == 36);

  // Erosion also eats at the image border, where outside is background.
  const BinaryMask corner = rect_mask(32, 32, 0, 0, 10, 10);
  CHECK(erode_mask(corner, 1).area() == 64);
  CHECK(tight_bbox(erode_mask(corner, 1)) == BBox{1, 1, 8, 8});
}

TEST_CASE("false positives are attributed off-category") {
  SceneSpec spec = small_spec(8);
  spec.degradation.false_positive_rate = 1.0;  // one FP per GT thing
  ExpertRouting routing;
  routing.experts.push_back({"one", {1}, false});
  routing.experts.push_back({"two", {2}, false});
  routing.experts.push_back({"rest", {}, true});

  const SyntheticScene scene = generate_gt(spec);
  const DegradedOutputs degraded = degrade(scene, spec, routing);
  const auto owned = routing.resolve(scene.categories);

  size_t off_category = 0;
  size_t total = 0;
  for (const auto& [name, preds] : degraded.per_expert) {
    for (const auto& p : preds) {
      ++total;
      if (owned.at(name).count(p.category_id) == 0) ++off_category;
    }
  }
  CHECK(total == scene.instances.size() + 4);  // 4 injected FPs
  CHECK(off_category == 4);

  // Expert routing removes exactly the injected noise.
  const auto merged =
      merge_expert_predictions(degraded.per_expert, routing, scene.categories);
  CHECK(merged.size() == scene.instances.size());
}

TEST_CASE("monotone degradation knobs never raise mean PQ") {
  const ExpertRouting routing = all_routing();

  SUBCASE("drop rate") {
    double previous = 2.0;
    for (double rate : {0.0, 0.5, 1.0}) {
      double total = 0.0;
      for (uint64_t seed = 0; seed < 30; ++seed) {
        SceneSpec spec = small_spec(seed);
        spec.degradation.drop_rate = rate;
        const SyntheticScene scene = generate_gt(spec);
        total += fused_pq(scene, degrade(scene, spec, routing), routing);
      }
      const double mean = total / 30.0;
      CHECK(mean <= previous + 1e-12);
      previous = mean;
    }
  }

  SUBCASE("semantic flip rate") {
    double previous = 2.0;
    for (double rate : {0.0, 0.3, 0.8}) {
      double total = 0.0;
      for (uint64_t seed = 0; seed < 30; ++seed) {
        SceneSpec spec = small_spec(seed);
        spec.degradation.semantic_flip_rate = rate;
        const SyntheticScene scene = generate_gt(spec);
        total += fused_pq(scene, degrade(scene, spec, routing), routing);
      }
      const double mean = total / 30.0;
      CHECK(mean <= previous + 1e-12);
      previous = mean;
    }
  }
}

TEST_CASE("scene categories derive from the pools") {
  const SceneSpec spec = small_spec(0);
  const auto categories = scene_categories(spec);
  REQUIRE(categories.size() == 5);
  CHECK(categories[0].id == 1);
  CHECK(categories[0].is_thing);
  CHECK(categories[2].id == 101);
  CHECK_FALSE(categories[2].is_thing);
  CHECK(merged_thing_id(categories) == 104);
}
