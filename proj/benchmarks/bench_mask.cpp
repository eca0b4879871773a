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

#include <vector>

#include "panoptic/mask.hpp"
#include "panoptic/synthgen.hpp"

namespace {

using panoptic::BinaryMask;
using panoptic::Rng;

std::vector<uint8_t> blocky_grid(Rng& rng, int width, int height, int blocks) {
  std::vector<uint8_t> grid(static_cast<size_t>(width) * height, 0);
  for (int b = 0; b < blocks; ++b) {
    const int w = rng.uniform_int(8, width / 4);
    const int h = rng.uniform_int(8, height / 4);
    const int x = rng.uniform_int(0, width - w);
    const int y = rng.uniform_int(0, height - h);
    for (int yy = y; yy < y + h; ++yy) {
      for (int xx = x; xx < x + w; ++xx) {
        grid[static_cast<size_t>(yy) * width + xx] = 1;
      }
    }
  }
  return grid;
}

void BM_RleEncode(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  Rng rng(1);
  const auto grid = blocky_grid(rng, side, side, 12);
  for (auto _ : state) {
    auto mask = BinaryMask::encode(side, side, grid);
    benchmark::DoNotOptimize(mask);
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_RleEncode)->Arg(256)->Arg(640);

void BM_RleDecode(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  Rng rng(2);
  const auto mask = BinaryMask::encode(side, side, blocky_grid(rng, side, side, 12));
  for (auto _ : state) {
    auto grid = mask.decode();
    benchmark::DoNotOptimize(grid);
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_RleDecode)->Arg(256)->Arg(640);

void BM_MaskIouRunwise(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  Rng rng(3);
  const auto a = BinaryMask::encode(side, side, blocky_grid(rng, side, side, 12));
  const auto b = BinaryMask::encode(side, side, blocky_grid(rng, side, side, 12));
  for (auto _ : state) {
    benchmark::DoNotOptimize(panoptic::mask_iou(a, b));
  }
}
BENCHMARK(BM_MaskIouRunwise)->Arg(256)->Arg(640);

void BM_MaskIouDense(benchmark::State& state) {
  // Decode-and-count baseline the run-wise path is meant to beat.
  const int side = static_cast<int>(state.range(0));
  Rng rng(3);
  const auto a = BinaryMask::encode(side, side, blocky_grid(rng, side, side, 12));
  const auto b = BinaryMask::encode(side, side, blocky_grid(rng, side, side, 12));
  for (auto _ : state) {
    const auto ga = a.decode();
    const auto gb = b.decode();
    uint64_t inter = 0;
    uint64_t uni = 0;
    for (size_t i = 0; i < ga.size(); ++i) {
      inter += ga[i] & gb[i];
      uni += ga[i] | gb[i];
    }
    benchmark::DoNotOptimize(uni == 0 ? 0.0 : double(inter) / double(uni));
  }
}
BENCHMARK(BM_MaskIouDense)->Arg(256)->Arg(640);

void BM_ErodeMask(benchmark::State& state) {
  Rng rng(4);
  const auto mask = BinaryMask::encode(640, 480, blocky_grid(rng, 640, 480, 12));
  for (auto _ : state) {
    benchmark::DoNotOptimize(panoptic::erode_mask(mask, 2));
  }
}
BENCHMARK(BM_ErodeMask);

}  // namespace
