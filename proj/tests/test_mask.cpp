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

#include "panoptic/mask.hpp"

#include <doctest.h>

#include "panoptic/synthgen.hpp"
#include "test_support.hpp"

using namespace panoptic;
using namespace panoptic::testing;

TEST_CASE("rle_encode forced examples") {
  const std::vector<uint8_t> all_bg = {0, 0, 0, 0};
  CHECK(BinaryMask::encode(2, 2, all_bg).runs == std::vector<uint64_t>{4});

  const std::vector<uint8_t> all_fg = {1, 1, 1, 1};
  CHECK(BinaryMask::encode(2, 2, all_fg).runs == std::vector<uint64_t>{0, 4});
}

TEST_CASE("rle_decode forced examples") {
  BinaryMask mask{2, 2, {4}};
  CHECK(mask.decode() == std::vector<uint8_t>{0, 0, 0, 0});

  mask.runs = {0, 4};
  CHECK(mask.decode() == std::vector<uint8_t>{1, 1, 1, 1});

  // Pixels 1 and 2 in linear (row-major) order.
  mask.runs = {1, 2, 1};
  CHECK(mask.decode() == std::vector<uint8_t>{0, 1, 1, 0});
}

TEST_CASE("encode/decode roundtrip on random rasters") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const auto grid = random_grid(rng, 16, 16);
    const BinaryMask mask = BinaryMask::encode(16, 16, grid);
    mask.validate();
    CHECK(mask.decode() == grid);
  }
}

TEST_CASE("encode rejects bad dimensions") {
  CHECK_THROWS_AS(BinaryMask::encode(0, 5, {}), Error);
  CHECK_THROWS_AS(BinaryMask::encode(-1, 5, {}), Error);
  // width * height beyond the allocation guard
  CHECK_THROWS_AS(BinaryMask::encode(1 << 21, 1 << 20, {}), Error);
  // pixel buffer size mismatch
  CHECK_THROWS_AS(BinaryMask::encode(2, 2, std::vector<uint8_t>(3)), Error);
}

TEST_CASE("validate rejects malformed runs") {
  CHECK_THROWS_AS((BinaryMask{2, 2, {3}}).decode(), Error);      // sum short
  CHECK_THROWS_AS((BinaryMask{2, 2, {5}}).decode(), Error);      // sum long
  CHECK_THROWS_AS((BinaryMask{2, 2, {1, 0, 3}}).decode(), Error);  // interior 0
  CHECK_THROWS_AS((BinaryMask{2, 2, {}}).decode(), Error);
  CHECK_NOTHROW((BinaryMask{2, 2, {0, 4}}).validate());  // leading 0 is fine
}

TEST_CASE("mask_iou examples") {
  const BinaryMask a = rect_mask(20, 20, 2, 3, 10, 10);
  CHECK(mask_iou(a, a) == 1.0);

  const BinaryMask b = rect_mask(20, 20, 13, 14, 4, 4);
  CHECK(mask_iou(a, b) == 0.0);

  // 10x10 block against the same block shifted by 2: overlap 80, union 120.
  const BinaryMask shifted = rect_mask(20, 20, 4, 3, 10, 10);
  CHECK(mask_iou(a, shifted) == doctest::Approx(80.0 / 120.0).epsilon(1e-12));
  CHECK(mask_iou(a, shifted) ==
        dense_iou(a.decode(), shifted.decode()));

  const BinaryMask empty = BinaryMask::encode(20, 20, std::vector<uint8_t>(400, 0));
  CHECK(mask_iou(empty, empty) == 0.0);

  const BinaryMask other_dims = rect_mask(10, 10, 0, 0, 2, 2);
  CHECK_THROWS_AS(mask_iou(a, other_dims), Error);
}

TEST_CASE("bbox_iou examples") {
  const BBox a{0, 0, 10, 10};
  CHECK(bbox_iou(a, a) == 1.0);
  CHECK(bbox_iou(a, BBox{20, 20, 5, 5}) == 0.0);
  CHECK(bbox_iou(a, BBox{5, 0, 10, 10}) ==
        doctest::Approx(50.0 / 150.0).epsilon(1e-12));
  CHECK(bbox_iou(BBox{3, 3, 0, 0}, a) == 0.0);
  CHECK(bbox_iou(BBox{0, 0, 0, 0}, BBox{0, 0, 0, 0}) == 0.0);
}

TEST_CASE("mask_area from runs") {
  CHECK(BinaryMask{2, 2, {0, 4}}.area() == 4);
  CHECK(BinaryMask{2, 2, {4}}.area() == 0);

  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto grid = random_grid(rng, 32, 32, 0.3);
    CHECK(BinaryMask::encode(32, 32, grid).area() == dense_area(grid));
  }
}

TEST_CASE("run-level arithmetic matches dense oracles on random masks") {
  Rng rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    const auto ga = random_grid(rng, 32, 32, 0.4);
    const auto gb = random_grid(rng, 32, 32, 0.6);
    const BinaryMask a = BinaryMask::encode(32, 32, ga);
    const BinaryMask b = BinaryMask::encode(32, 32, gb);

    CHECK(mask_intersection(a, b) == dense_intersection(ga, gb));
    CHECK(mask_iou(a, b) == dense_iou(ga, gb));
    CHECK(mask_iou(a, b) == mask_iou(b, a));
    CHECK(mask_iou(a, b) >= 0.0);
    CHECK(mask_iou(a, b) <= 1.0);
    const bool identical = ga == gb;
    const bool nonempty = dense_area(ga) > 0;
    if (nonempty) CHECK((mask_iou(a, b) == 1.0) == identical);
  }
}

TEST_CASE("tight_bbox") {
  CHECK(tight_bbox(rect_mask(20, 15, 3, 4, 5, 6)) == BBox{3, 4, 5, 6});
  CHECK(tight_bbox(rect_mask(20, 15, 0, 0, 1, 1)) == BBox{0, 0, 1, 1});

  // An L-shape whose runs span row boundaries.
  std::vector<uint8_t> grid(6 * 4, 0);
  for (int x = 2; x < 6; ++x) grid[0 * 6 + x] = 1;  // row 0: cols 2..5
  for (int x = 0; x < 3; ++x) grid[1 * 6 + x] = 1;  // row 1: cols 0..2
  CHECK(tight_bbox(BinaryMask::encode(6, 4, grid)) == BBox{0, 0, 6, 2});

  const BinaryMask empty{3, 3, {9}};
  CHECK_THROWS_AS(tight_bbox(empty), Error);
}

TEST_CASE("ScoredInstance construction enforces invariants") {
  const BinaryMask mask = rect_mask(12, 12, 2, 3, 4, 5);
  const ScoredInstance inst = ScoredInstance::create(7, 0.25, mask);
  CHECK(inst.category_id == 7);
  CHECK(inst.score == 0.25);
  CHECK(inst.bbox == BBox{2, 3, 4, 5});
  CHECK(inst.bbox == tight_bbox(inst.mask));

  CHECK_THROWS_AS(ScoredInstance::create(7, 1.5, mask), Error);
  CHECK_THROWS_AS(ScoredInstance::create(7, -0.1, mask), Error);
  const BinaryMask empty{12, 12, {144}};
  CHECK_THROWS_AS(ScoredInstance::create(7, 0.5, empty), Error);
}

TEST_CASE("LabelMap basics") {
  const LabelMap map = LabelMap::filled(3, 2, 21);
  CHECK(map.labels == std::vector<int32_t>(6, 21));
  CHECK(map.at(2, 1) == 21);
  CHECK_THROWS_AS(LabelMap::filled(0, 2, 1), Error);
}
