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

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

namespace panoptic {

namespace {

struct Extent {
  uint64_t area = 0;
  int min_x = std::numeric_limits<int>::max();
  int min_y = std::numeric_limits<int>::max();
  int max_x = -1;
  int max_y = -1;

  void cover(int x, int y) {
    ++area;
    min_x = std::min(min_x, x);
    min_y = std::min(min_y, y);
    max_x = std::max(max_x, x);
    max_y = std::max(max_y, y);
  }
  BBox bbox() const {
    return BBox{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
  }
};

}  // namespace

void FusionParams::validate() const {
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
    throw Error("score_threshold outside [0, 1]");
  }
  if (!(overlap_threshold >= 0.0 && overlap_threshold <= 1.0)) {
    throw Error("overlap_threshold outside [0, 1]");
  }
}

FusionStats& FusionStats::operator+=(const FusionStats& other) {
  instances_total += other.instances_total;
  instances_dropped_score += other.instances_dropped_score;
  instances_dropped_overlap += other.instances_dropped_overlap;
  stuff_segments_dropped += other.stuff_segments_dropped;
  void_pixels += other.void_pixels;
  total_pixels += other.total_pixels;
  return *this;
}

PanopticImage fuse(std::span<const ScoredInstance> instances,
                   const LabelMap& semantic, const FusionParams& params,
                   std::span<const Category> categories, FusionStats* stats) {
  params.validate();
  CategoryIndex index(categories);
  const int32_t merged = index.merged_thing();
  const int width = semantic.width;
  const int height = semantic.height;
  if (width <= 0 || height <= 0 ||
      semantic.labels.size() != static_cast<size_t>(width) * height) {
    throw Error("semantic label map dimensions are inconsistent");
  }

  FusionStats local;
  local.instances_total = instances.size();
  local.total_pixels = static_cast<uint64_t>(width) * height;

  std::vector<size_t> order;
  for (size_t i = 0; i < instances.size(); ++i) {
    const ScoredInstance& inst = instances[i];
    if (inst.mask.width != width || inst.mask.height != height) {
      throw Error("instance " + std::to_string(i) +
                  " mask dimensions do not match the semantic map");
    }
    const Category& cat = index.at(inst.category_id);
    if (!cat.is_thing) {
      throw Error("instance " + std::to_string(i) + " has stuff category " +
                  std::to_string(inst.category_id));
    }
    if (inst.score < params.score_threshold) {
      ++local.instances_dropped_score;
      continue;
    }
    order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const ScoredInstance& ia = instances[a];
    const ScoredInstance& ib = instances[b];
    if (ia.score != ib.score) return ia.score > ib.score;
    const uint64_t area_a = ia.mask.area();
    const uint64_t area_b = ib.mask.area();
    if (area_a != area_b) return area_a > area_b;
    return a < b;
  });

  PanopticImage out;
  out.width = width;
  out.height = height;
  out.id_map.assign(static_cast<size_t>(width) * height, 0);

  uint32_t next_id = 1;
  for (size_t i : order) {
    const ScoredInstance& inst = instances[i];
    const std::vector<uint8_t> grid = inst.mask.decode();
    const uint64_t mask_area = inst.mask.area();
    uint64_t unclaimed = 0;
    for (size_t p = 0; p < grid.size(); ++p) {
      if (grid[p] && out.id_map[p] == 0) ++unclaimed;
    }
    if (static_cast<double>(unclaimed) <=
        (1.0 - params.overlap_threshold) * static_cast<double>(mask_area)) {
      ++local.instances_dropped_overlap;
      continue;
    }
    Extent extent;
    const uint32_t id = next_id++;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const size_t p = static_cast<size_t>(y) * width + x;
        if (grid[p] && out.id_map[p] == 0) {
          out.id_map[p] = id;
          extent.cover(x, y);
        }
      }
    }
    out.segments.push_back(SegmentInfo{id, inst.category_id, extent.area,
                                       extent.bbox(), /*iscrowd=*/false});
  }

  // Unclaimed pixels take their semantic label; one segment per stuff
  // category, merged-thing and VOID stay VOID.
  std::map<int32_t, Extent> stuff_extent;
  int32_t last_label = kVoidLabel;
  Extent* last_extent = nullptr;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const size_t p = static_cast<size_t>(y) * width + x;
      if (out.id_map[p] != 0) continue;
      const int32_t label = semantic.labels[p];
      if (label == kVoidLabel || label == merged) continue;
      if (label != last_label || last_extent == nullptr) {
        const Category* cat = index.find(label);
        if (cat == nullptr || cat->is_thing) {
          throw Error("semantic label " + std::to_string(label) +
                      " is not a stuff category, merged-thing or VOID");
        }
        last_label = label;
        last_extent = &stuff_extent[label];
      }
      last_extent->cover(x, y);
    }
  }

  std::map<int32_t, uint32_t> stuff_id;
  for (const auto& [label, extent] : stuff_extent) {
    if (extent.area < params.stuff_area_min) {
      ++local.stuff_segments_dropped;
      continue;
    }
    const uint32_t id = next_id++;
    stuff_id[label] = id;
    out.segments.push_back(
        SegmentInfo{id, label, extent.area, extent.bbox(), /*iscrowd=*/false});
  }
  if (!stuff_id.empty()) {
    for (size_t p = 0; p < out.id_map.size(); ++p) {
      if (out.id_map[p] != 0) continue;
      const int32_t label = semantic.labels[p];
      if (label == kVoidLabel || label == merged) continue;
      auto it = stuff_id.find(label);
      if (it != stuff_id.end()) out.id_map[p] = it->second;
    }
  }

  for (uint32_t id : out.id_map) {
    if (id == 0) ++local.void_pixels;
  }
  if (stats != nullptr) *stats = local;
  return out;
}

std::vector<PanopticImage> fuse_batch(std::span<const FusionInput> inputs,
                                      const FusionParams& params,
                                      std::span<const Category> categories,
                                      int parallelism, FusionStats* stats) {
  if (parallelism <= 0) {
    parallelism = static_cast<int>(std::thread::hardware_concurrency());
    if (parallelism <= 0) parallelism = 1;
  }
  const size_t n = inputs.size();
  std::vector<PanopticImage> outputs(n);
  std::vector<FusionStats> per_image(n);
  std::vector<std::string> errors(n);

  auto worker = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      try {
        outputs[i] =
            fuse(inputs[i].instances, inputs[i].semantic, params, categories,
                 &per_image[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  const size_t workers = std::min<size_t>(static_cast<size_t>(parallelism),
                                          std::max<size_t>(n, 1));
  if (workers <= 1) {
    worker(0, n);
  } else {
    std::vector<std::thread> threads;
    const size_t chunk = (n + workers - 1) / workers;
    for (size_t w = 0; w < workers; ++w) {
      const size_t begin = w * chunk;
      const size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      threads.emplace_back(worker, begin, end);
    }
    for (auto& t : threads) t.join();
  }

  for (size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      throw Error("image " + std::to_string(inputs[i].image_id) + ": " +
                  errors[i]);
    }
  }
  if (stats != nullptr) {
    FusionStats total;
    for (const auto& s : per_image) total += s;
    *stats = total;
  }
  return outputs;
}

}  // namespace panoptic
