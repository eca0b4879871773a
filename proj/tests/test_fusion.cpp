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

#include "panoptic/fusion.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "panoptic/synthgen.hpp"
#include "test_support.hpp"

using namespace panoptic;
using namespace panoptic::testing;

namespace {

// Literal per-pixel replay of the greedy combination on dense grids,
// independent of the production bookkeeping.
PanopticImage fuse_oracle(const std::vector<ScoredInstance>& instances,
                          const LabelMap& semantic, const FusionParams& params,
                          std::span<const Category> categories) {
  CategoryIndex index(categories);
  const int32_t merged = index.merged_thing();
  const int width = semantic.width;
  const int height = semantic.height;
  const size_t n_pixels = static_cast<size_t>(width) * height;

  std::vector<size_t> order;
  for (size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].score >= params.score_threshold) order.push_back(i);
  }
  std::vector<std::vector<uint8_t>> grids(instances.size());
  for (size_t i : order) grids[i] = instances[i].mask.decode();
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (instances[a].score != instances[b].score) {
      return instances[a].score > instances[b].score;
    }
    return dense_area(grids[a]) > dense_area(grids[b]);
  });

  std::vector<uint32_t> ids(n_pixels, 0);
  std::map<uint32_t, std::pair<int32_t, bool>> table;
  uint32_t next_id = 1;
  for (size_t i : order) {
    uint64_t unclaimed = 0;
    for (size_t p = 0; p < n_pixels; ++p) {
      if (grids[i][p] && ids[p] == 0) ++unclaimed;
    }
    const double area = static_cast<double>(dense_area(grids[i]));
    if (static_cast<double>(unclaimed) <=
        (1.0 - params.overlap_threshold) * area) {
      continue;
    }
    const uint32_t id = next_id++;
    for (size_t p = 0; p < n_pixels; ++p) {
      if (grids[i][p] && ids[p] == 0) ids[p] = id;
    }
    table[id] = {instances[i].category_id, false};
  }

  std::map<int32_t, uint64_t> stuff_area;
  for (size_t p = 0; p < n_pixels; ++p) {
    if (ids[p] != 0) continue;
    const int32_t label = semantic.labels[p];
    if (label == kVoidLabel || label == merged) continue;
    ++stuff_area[label];
  }
  std::map<int32_t, uint32_t> stuff_ids;
  for (const auto& [label, area] : stuff_area) {
    if (area < params.stuff_area_min) continue;
    stuff_ids[label] = next_id++;
    table[stuff_ids[label]] = {label, false};
  }
  for (size_t p = 0; p < n_pixels; ++p) {
    if (ids[p] != 0) continue;
    const int32_t label = semantic.labels[p];
    auto it = stuff_ids.find(label);
    if (it != stuff_ids.end()) ids[p] = it->second;
  }
  return panoptic_from_grid(width, height, ids, table);
}

LabelMap constant_semantic(int width, int height, int32_t label) {
  return LabelMap::filled(width, height, label);
}

}  // namespace

TEST_CASE("stuff-only fusion emits one segment per category") {
  const auto categories = two_stuff_two_things();
  const FusionParams params{0.5, 0.5, 0};
  const PanopticImage out =
      fuse({}, constant_semantic(8, 6, 21), params, categories);
  REQUIRE(out.segments.size() == 1);
  CHECK(out.segments[0].category_id == 21);
  CHECK(out.segments[0].area == 48);
  CHECK(validate_panoptic(out).ok());
}

TEST_CASE("instance wins overlap pixels against stuff") {
  const auto categories = two_stuff_two_things();
  const FusionParams params{0.5, 0.5, 0};
  const std::vector<ScoredInstance> instances = {
      ScoredInstance::create(1, 0.9, rect_mask(8, 6, 2, 1, 3, 4))};
  const LabelMap semantic = constant_semantic(8, 6, 21);

  const PanopticImage out = fuse(instances, semantic, params, categories);
  REQUIRE(out.segments.size() == 2);
  CHECK(out.segments[0].category_id == 1);
  CHECK(out.segments[0].area == 12);
  CHECK(out.segments[1].category_id == 21);
  CHECK(out.segments[1].area == 48 - 12);
  CHECK(out == fuse_oracle(instances, semantic, params, categories));
  CHECK(validate_panoptic(out).ok());
}

TEST_CASE("a fully pre-claimed duplicate is dropped") {
  const auto categories = two_stuff_two_things();
  const FusionParams params{0.0, 0.5, 0};
  const BinaryMask mask = rect_mask(8, 6, 1, 1, 4, 4);
  const std::vector<ScoredInstance> instances = {
      ScoredInstance::create(1, 0.9, mask),
      ScoredInstance::create(1, 0.8, mask)};
  FusionStats stats;
  const PanopticImage out = fuse(instances, constant_semantic(8, 6, 21),
                                 params, categories, &stats);
  CHECK(stats.instances_dropped_overlap == 1);
  REQUIRE(out.segments.size() == 2);  // one person + grass
  CHECK(out.segments[0].category_id == 1);
  CHECK(out == fuse_oracle(instances, constant_semantic(8, 6, 21), params,
                           categories));
}

TEST_CASE("score threshold discards instances up front") {
  const auto categories = two_stuff_two_things();
  const FusionParams params{0.5, 0.5, 0};
  const std::vector<ScoredInstance> instances = {
      ScoredInstance::create(1, 0.49, rect_mask(8, 6, 0, 0, 2, 2))};
  FusionStats stats;
  const PanopticImage out = fuse(instances, constant_semantic(8, 6, 21),
                                 params, categories, &stats);
  CHECK(stats.instances_dropped_score == 1);
  CHECK(out.segments.size() == 1);
}

TEST_CASE("merged-thing and void semantic pixels become void") {
  const auto categories = two_stuff_two_things();
  const int32_t merged = merged_thing_id(categories);
  const FusionParams params{0.5, 0.5, 0};
  LabelMap semantic = constant_semantic(4, 2, 21);
  semantic.labels[0] = merged;
  semantic.labels[1] = kVoidLabel;

  FusionStats stats;
  const PanopticImage out = fuse({}, semantic, params, categories, &stats);
  CHECK(out.id_map[0] == 0);
  CHECK(out.id_map[1] == 0);
  CHECK(out.id_map[2] != 0);
  CHECK(stats.void_pixels == 2);
  CHECK(stats.void_fraction() == doctest::Approx(2.0 / 8.0));
}

TEST_CASE("small stuff segments are dropped to void") {
  const auto categories = two_stuff_two_things();
  FusionParams params{0.5, 0.5, 4};
  LabelMap semantic = constant_semantic(4, 2, 21);
  semantic.labels[7] = 22;  // a 1-pixel sky segment, below the minimum

  FusionStats stats;
  const PanopticImage out = fuse({}, semantic, params, categories, &stats);
  CHECK(stats.stuff_segments_dropped == 1);
  CHECK(out.id_map[7] == 0);
  REQUIRE(out.segments.size() == 1);  // grass (7 px) survives
  CHECK(out.segments[0].category_id == 21);
}

TEST_CASE("error paths") {
  const auto categories = two_stuff_two_things();
  const FusionParams params{0.5, 0.5, 0};
  const LabelMap semantic = constant_semantic(8, 6, 21);

  // stuff category on an instance
  const std::vector<ScoredInstance> stuffy = {
      ScoredInstance::create(21, 0.9, rect_mask(8, 6, 0, 0, 2, 2))};
  CHECK_THROWS_AS(fuse(stuffy, semantic, params, categories), Error);

  // dimension mismatch
  const std::vector<ScoredInstance> wrong_size = {
      ScoredInstance::create(1, 0.9, rect_mask(4, 4, 0, 0, 2, 2))};
  CHECK_THROWS_AS(fuse(wrong_size, semantic, params, categories), Error);

  // a thing id in the semantic map is not a legal stuff label
  CHECK_THROWS_AS(fuse({}, constant_semantic(8, 6, 1), params, categories),
                  Error);
  CHECK_THROWS_AS(fuse({}, constant_semantic(8, 6, 777), params, categories),
                  Error);

  const FusionParams bad_score{-0.1, 0.5, 0};
  CHECK_THROWS_AS(bad_score.validate(), Error);
  const FusionParams bad_overlap{0.5, 1.5, 0};
  CHECK_THROWS_AS(bad_overlap.validate(), Error);
}

TEST_CASE("randomized fusion matches the dense replay oracle") {
  const auto categories = two_stuff_two_things();
  const int32_t merged = merged_thing_id(categories);
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const int width = rng.uniform_int(6, 24);
    const int height = rng.uniform_int(6, 20);
    std::vector<ScoredInstance> instances;
    const int n = rng.uniform_int(0, 6);
    for (int i = 0; i < n; ++i) {
      const int w = rng.uniform_int(1, width);
      const int h = rng.uniform_int(1, height);
      const int x = rng.uniform_int(0, width - w);
      const int y = rng.uniform_int(0, height - h);
      instances.push_back(
          ScoredInstance::create(rng.uniform_int(0, 1) == 0 ? 1 : 2,
                                 rng.uniform(), rect_mask(width, height, x, y, w, h)));
    }
    LabelMap semantic;
    semantic.width = width;
    semantic.height = height;
    const std::vector<int32_t> labels = {kVoidLabel, 21, 22, merged};
    for (int p = 0; p < width * height; ++p) {
      semantic.labels.push_back(labels[static_cast<size_t>(rng.uniform_int(0, 3))]);
    }
    FusionParams params;
    params.score_threshold = rng.uniform_int(0, 1) == 0 ? 0.0 : 0.5;
    params.overlap_threshold =
        std::vector<double>{0.0, 0.5, 1.0}[static_cast<size_t>(rng.uniform_int(0, 2))];
    params.stuff_area_min = static_cast<uint64_t>(rng.uniform_int(0, 20));

    FusionStats stats;
    const PanopticImage out =
        fuse(instances, semantic, params, categories, &stats);
    CHECK(out == fuse_oracle(instances, semantic, params, categories));
    CHECK(validate_panoptic(out).ok());

    // Totality: segment areas plus void cover the image exactly once.
    uint64_t covered = stats.void_pixels;
    for (const auto& seg : out.segments) covered += seg.area;
    CHECK(covered == static_cast<uint64_t>(width) * height);
  }
}

TEST_CASE("permissive thresholds drop nothing") {
  const auto categories = two_stuff_two_things();
  // Disjoint instances, so nothing can be fully pre-claimed.
  const std::vector<ScoredInstance> instances = {
      ScoredInstance::create(1, 0.0, rect_mask(12, 8, 0, 0, 4, 4)),
      ScoredInstance::create(2, 0.3, rect_mask(12, 8, 5, 0, 4, 4)),
      ScoredInstance::create(1, 0.9, rect_mask(12, 8, 0, 5, 6, 3))};
  const FusionParams params{0.0, 1.0, 0};
  FusionStats stats;
  const PanopticImage out = fuse(instances, constant_semantic(12, 8, 21),
                                 params, categories, &stats);
  CHECK(stats.instances_dropped_score == 0);
  CHECK(stats.instances_dropped_overlap == 0);
  CHECK(stats.stuff_segments_dropped == 0);
  CHECK(out.segments.size() == 4);
  uint64_t covered = stats.void_pixels;
  for (const auto& seg : out.segments) covered += seg.area;
  CHECK(covered == 96);
}

TEST_CASE("greedy priority: no later instance takes an earlier one's pixel") {
  const auto categories = two_stuff_two_things();
  const FusionParams params{0.0, 1.0, 0};
  const std::vector<ScoredInstance> instances = {
      ScoredInstance::create(1, 0.4, rect_mask(10, 10, 0, 0, 6, 6)),
      ScoredInstance::create(2, 0.9, rect_mask(10, 10, 3, 3, 6, 6))};
  const PanopticImage out = fuse(instances, constant_semantic(10, 10, 21),
                                 params, categories);
  // The higher-scored car claims first and holds the overlap.
  REQUIRE(out.segments.size() >= 2);
  CHECK(out.segments[0].category_id == 2);
  CHECK(out.segments[0].area == 36);
  CHECK(out.segments[1].category_id == 1);
  CHECK(out.segments[1].area == 36 - 9);
}

TEST_CASE("fuse_batch") {
  const auto categories = two_stuff_two_things();
  const FusionParams params{0.5, 0.5, 0};

  SUBCASE("empty batch") {
    FusionStats stats;
    CHECK(fuse_batch({}, params, categories, 2, &stats).empty());
    CHECK(stats.total_pixels == 0);
  }

  SUBCASE("single image matches fuse and stats are exact") {
    FusionInput input;
    input.image_id = 42;
    input.instances = {ScoredInstance::create(1, 0.9, rect_mask(8, 6, 2, 1, 3, 4)),
                       ScoredInstance::create(1, 0.2, rect_mask(8, 6, 0, 0, 2, 2))};
    input.semantic = constant_semantic(8, 6, 21);
    FusionStats batch_stats;
    const auto outputs = fuse_batch(std::vector<FusionInput>{input}, params,
                                    categories, 1, &batch_stats);
    FusionStats direct_stats;
    const PanopticImage direct = fuse(input.instances, input.semantic, params,
                                      categories, &direct_stats);
    REQUIRE(outputs.size() == 1);
    CHECK(outputs[0] == direct);
    CHECK(batch_stats.instances_total == direct_stats.instances_total);
    CHECK(batch_stats.instances_dropped_score ==
          direct_stats.instances_dropped_score);
    CHECK(batch_stats.void_pixels == direct_stats.void_pixels);
  }

  SUBCASE("results are independent of the worker count") {
    Rng rng(11);
    std::vector<FusionInput> inputs;
    for (int i = 0; i < 9; ++i) {
      FusionInput input;
      input.image_id = i;
      const int n = rng.uniform_int(0, 4);
      for (int k = 0; k < n; ++k) {
        const int w = rng.uniform_int(1, 6);
        const int h = rng.uniform_int(1, 6);
        input.instances.push_back(ScoredInstance::create(
            1, rng.uniform(),
            rect_mask(16, 12, rng.uniform_int(0, 16 - w),
                      rng.uniform_int(0, 12 - h), w, h)));
      }
      input.semantic = constant_semantic(16, 12, 21);
      inputs.push_back(std::move(input));
    }
    FusionStats stats1, stats4;
    const auto out1 = fuse_batch(inputs, params, categories, 1, &stats1);
    const auto out4 = fuse_batch(inputs, params, categories, 4, &stats4);
    CHECK(out1 == out4);
    CHECK(stats1.instances_total == stats4.instances_total);
    CHECK(stats1.void_pixels == stats4.void_pixels);
  }

  SUBCASE("per-image errors carry the image id") {
    FusionInput input;
    input.image_id = 7;
    input.instances = {
        ScoredInstance::create(21, 0.9, rect_mask(8, 6, 0, 0, 2, 2))};
    input.semantic = constant_semantic(8, 6, 21);
    try {
      fuse_batch(std::vector<FusionInput>{input}, params, categories, 1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("image 7") != std::string::npos);
    }
  }
}
