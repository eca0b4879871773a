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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace panoptic {

namespace {

// Stream salts for seed derivation; every random quantity gets its own
// stream so degradation knobs stay independent.
constexpr uint64_t kStreamScene = 0x5ce9e1;
constexpr uint64_t kStreamInstance = 0x1000000;
constexpr uint64_t kStreamFalsePositive = 0x2000000;
constexpr uint64_t kStreamSemantic = 0x3000000;

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

struct Block {
  int x = 0, y = 0, w = 0, h = 0;
  int32_t category = 0;
};

Block sample_block(Rng& rng, const SceneSpec& spec) {
  Block b;
  const int max_w = std::min(spec.thing_max_extent, spec.width);
  const int max_h = std::min(spec.thing_max_extent, spec.height);
  b.w = rng.uniform_int(std::min(spec.thing_min_extent, max_w), max_w);
  b.h = rng.uniform_int(std::min(spec.thing_min_extent, max_h), max_h);
  b.x = rng.uniform_int(0, spec.width - b.w);
  b.y = rng.uniform_int(0, spec.height - b.h);
  b.category = spec.thing_categories[rng.uniform_int(
      0, static_cast<int>(spec.thing_categories.size()) - 1)];
  return b;
}

BinaryMask block_mask(int width, int height, const Block& b) {
  std::vector<uint8_t> grid(static_cast<size_t>(width) * height, 0);
  for (int y = b.y; y < b.y + b.h; ++y) {
    std::fill(grid.begin() + static_cast<size_t>(y) * width + b.x,
              grid.begin() + static_cast<size_t>(y) * width + b.x + b.w, 1);
  }
  return BinaryMask::encode(width, height, grid);
}

}  // namespace

double Rng::gaussian() {
  // Box-Muller with a guard against log(0).
  const double u1 = std::max(uniform(), 0x1.0p-53);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  Rng rng(seed ^ (stream * 0x9e3779b97f4a7c15ull));
  return rng.next_u64();
}

void Degradation::validate() const {
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(std::string(name) + " must be in [0, 1]");
    }
  };
  rate(false_positive_rate, "false_positive_rate");
  rate(drop_rate, "drop_rate");
  rate(semantic_flip_rate, "semantic_flip_rate");
  if (boundary_erosion_px < 0) throw Error("boundary_erosion_px must be >= 0");
  if (score_noise_sigma < 0.0) throw Error("score_noise_sigma must be >= 0");
}

void SceneSpec::validate() const {
  if (width <= 0 || height <= 0) throw Error("scene dimensions must be positive");
  if (n_things < 0) throw Error("n_things must be >= 0");
  if (n_things > 0 && thing_categories.empty()) {
    throw Error("n_things > 0 requires a thing category pool");
  }
  if (stuff_categories.empty()) {
    throw Error("scene needs at least one stuff category");
  }
  if (n_stuff_regions < 1) throw Error("n_stuff_regions must be >= 1");
  if (n_stuff_regions > width) {
    throw Error("n_stuff_regions exceeds image width");
  }
  if (thing_min_extent < 1 || thing_max_extent < thing_min_extent) {
    throw Error("thing extents must satisfy 1 <= min <= max");
  }
  if (n_semantic_models < 1) throw Error("n_semantic_models must be >= 1");
  std::set<int32_t> ids;
  for (int32_t id : thing_categories) {
    if (id <= 0) throw Error("thing category ids must be positive");
    if (!ids.insert(id).second) throw Error("duplicate category id in pools");
  }
  for (int32_t id : stuff_categories) {
    if (id <= 0) throw Error("stuff category ids must be positive");
    if (!ids.insert(id).second) throw Error("duplicate category id in pools");
  }
  degradation.validate();
}

std::vector<Category> scene_categories(const SceneSpec& spec) {
  spec.validate();
  std::vector<Category> categories;
  for (int32_t id : spec.thing_categories) {
    categories.push_back(Category{id, "thing_" + std::to_string(id), true,
                                  palette_color(static_cast<uint32_t>(id)),
                                  std::nullopt});
  }
  for (int32_t id : spec.stuff_categories) {
    categories.push_back(Category{id, "stuff_" + std::to_string(id), false,
                                  palette_color(static_cast<uint32_t>(id)),
                                  std::nullopt});
  }
  std::sort(categories.begin(), categories.end(),
            [](const Category& a, const Category& b) { return a.id < b.id; });
  return categories;
}

SyntheticScene generate_gt(const SceneSpec& spec) {
  spec.validate();
  SyntheticScene scene;
  scene.categories = scene_categories(spec);

  Rng rng(mix_seed(spec.rng_seed, kStreamScene));
  const int width = spec.width;
  const int height = spec.height;

  // Stuff background: vertical bands with categories drawn from the pool;
  // bands of the same category share one segment.
  std::vector<int32_t> band_category(spec.n_stuff_regions);
  for (auto& cat : band_category) {
    cat = spec.stuff_categories[rng.uniform_int(
        0, static_cast<int>(spec.stuff_categories.size()) - 1)];
  }

  std::vector<Block> things(spec.n_things);
  for (auto& thing : things) thing = sample_block(rng, spec);

  const auto rasterize = [&](std::vector<uint32_t>& id_map,
                             const std::map<int32_t, uint32_t>& stuff_ids) {
    for (int x = 0; x < width; ++x) {
      const int band = std::min(
          spec.n_stuff_regions - 1,
          static_cast<int>(static_cast<int64_t>(x) * spec.n_stuff_regions /
                           width));
      const uint32_t id = stuff_ids.at(band_category[band]);
      for (int y = 0; y < height; ++y) {
        id_map[static_cast<size_t>(y) * width + x] = id;
      }
    }
    for (size_t i = 0; i < things.size(); ++i) {
      const Block& b = things[i];
      const auto id = static_cast<uint32_t>(i + 1);
      for (int y = b.y; y < b.y + b.h; ++y) {
        std::fill(id_map.begin() + static_cast<size_t>(y) * width + b.x,
                  id_map.begin() + static_cast<size_t>(y) * width + b.x + b.w,
                  id);
      }
    }
  };

  // Stuff segment ids follow the things, ascending by category.
  std::map<int32_t, uint32_t> stuff_ids;
  {
    std::set<int32_t> distinct(band_category.begin(), band_category.end());
    uint32_t next = static_cast<uint32_t>(spec.n_things) + 1;
    for (int32_t cat : distinct) stuff_ids[cat] = next++;
  }

  std::vector<uint32_t> id_map(static_cast<size_t>(width) * height);
  const int max_attempts = 100 + 10 * spec.n_things;
  int attempts = 0;
  for (;;) {
    rasterize(id_map, stuff_ids);
    std::vector<uint64_t> visible(things.size() + 1, 0);
    for (uint32_t id : id_map) {
      if (id >= 1 && id <= things.size()) ++visible[id];
    }
    int hidden = -1;
    for (size_t i = 0; i < things.size(); ++i) {
      if (visible[i + 1] == 0) {
        hidden = static_cast<int>(i);
        break;
      }
    }
    if (hidden < 0) break;
    if (++attempts > max_attempts) {
      throw Error("scene is over-packed: thing " + std::to_string(hidden) +
                  " cannot keep a visible pixel");
    }
    things[static_cast<size_t>(hidden)] = sample_block(rng, spec);
  }

  scene.panoptic.width = width;
  scene.panoptic.height = height;
  scene.panoptic.id_map = std::move(id_map);

  std::map<uint32_t, Extent> extents;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const uint32_t id =
          scene.panoptic.id_map[static_cast<size_t>(y) * width + x];
      extents[id].cover(x, y);
    }
  }
  for (size_t i = 0; i < things.size(); ++i) {
    const Extent& e = extents.at(static_cast<uint32_t>(i + 1));
    scene.panoptic.segments.push_back(
        SegmentInfo{static_cast<uint32_t>(i + 1), things[i].category, e.area,
                    e.bbox(), /*iscrowd=*/false});
  }
  for (const auto& [cat, id] : stuff_ids) {
    auto it = extents.find(id);
    if (it == extents.end()) continue;  // band fully occluded
    scene.panoptic.segments.push_back(
        SegmentInfo{id, cat, it->second.area, it->second.bbox(),
                    /*iscrowd=*/false});
  }

  for (size_t i = 0; i < things.size(); ++i) {
    const auto id = static_cast<uint32_t>(i + 1);
    std::vector<uint8_t> grid(scene.panoptic.id_map.size(), 0);
    for (size_t p = 0; p < grid.size(); ++p) {
      grid[p] = scene.panoptic.id_map[p] == id ? 1 : 0;
    }
    scene.instances.push_back(ScoredInstance::create(
        things[i].category, 1.0, BinaryMask::encode(width, height, grid)));
  }

  scene.semantic_gt = panoptic_to_semantic_gt(scene.panoptic, scene.categories);
  return scene;
}

BinaryMask erode_mask(const BinaryMask& mask, int radius) {
  if (radius <= 0) return mask;
  const int width = mask.width;
  const int height = mask.height;
  const std::vector<uint8_t> grid = mask.decode();

  // Separable min-filter; out-of-image neighbors count as background.
  std::vector<uint8_t> rows(grid.size(), 0);
  for (int y = 0; y < height; ++y) {
    const uint8_t* in = grid.data() + static_cast<size_t>(y) * width;
    uint8_t* out = rows.data() + static_cast<size_t>(y) * width;
    std::vector<uint32_t> prefix(width + 1, 0);
    for (int x = 0; x < width; ++x) prefix[x + 1] = prefix[x] + in[x];
    for (int x = radius; x < width - radius; ++x) {
      const uint32_t sum = prefix[x + radius + 1] - prefix[x - radius];
      out[x] = sum == static_cast<uint32_t>(2 * radius + 1) ? 1 : 0;
    }
  }
  std::vector<uint8_t> eroded(grid.size(), 0);
  for (int x = 0; x < width; ++x) {
    std::vector<uint32_t> prefix(height + 1, 0);
    for (int y = 0; y < height; ++y) {
      prefix[y + 1] = prefix[y] + rows[static_cast<size_t>(y) * width + x];
    }
    for (int y = radius; y < height - radius; ++y) {
      const uint32_t sum = prefix[y + radius + 1] - prefix[y - radius];
      eroded[static_cast<size_t>(y) * width + x] =
          sum == static_cast<uint32_t>(2 * radius + 1) ? 1 : 0;
    }
  }
  return BinaryMask::encode(width, height, eroded);
}

DegradedOutputs degrade(const SyntheticScene& scene, const SceneSpec& spec,
                        const ExpertRouting& routing) {
  spec.validate();
  const Degradation& deg = spec.degradation;
  const auto owned = routing.resolve(scene.categories);

  std::map<int32_t, std::string> owner_of;
  std::vector<std::string> expert_names;
  for (const auto& [name, categories] : owned) {
    expert_names.push_back(name);
    for (int32_t cat : categories) owner_of[cat] = name;
  }

  DegradedOutputs out;
  for (const auto& name : expert_names) out.per_expert[name];

  for (size_t i = 0; i < scene.instances.size(); ++i) {
    const ScoredInstance& gt = scene.instances[i];
    Rng rng(mix_seed(spec.rng_seed, kStreamInstance + i));
    const double drop_draw = rng.uniform();
    const double noise = rng.gaussian();
    if (drop_draw < deg.drop_rate) continue;
    BinaryMask mask = erode_mask(gt.mask, deg.boundary_erosion_px);
    if (mask.area() == 0) continue;  // eroded away entirely
    const double score =
        std::clamp(1.0 - std::abs(noise) * deg.score_noise_sigma, 0.0, 1.0);
    auto owner = owner_of.find(gt.category_id);
    if (owner == owner_of.end()) {
      throw Error("no expert owns category " +
                  std::to_string(gt.category_id));
    }
    out.per_expert[owner->second].push_back(
        ScoredInstance::create(gt.category_id, score, std::move(mask)));
  }

  const auto n_fp = static_cast<int64_t>(
      std::llround(deg.false_positive_rate * spec.n_things));
  for (int64_t j = 0; j < n_fp; ++j) {
    Rng rng(mix_seed(spec.rng_seed, kStreamFalsePositive + static_cast<uint64_t>(j)));
    const Block b = sample_block(rng, spec);
    const double score = 0.5 + 0.5 * rng.uniform();
    // Off-category attribution: an expert that does not own the category,
    // when one exists.
    std::vector<std::string> eligible;
    auto owner = owner_of.find(b.category);
    for (const auto& name : expert_names) {
      if (owner == owner_of.end() || owner->second != name) {
        eligible.push_back(name);
      }
    }
    if (eligible.empty()) eligible = expert_names;
    const std::string& producer =
        eligible[static_cast<size_t>(rng.uniform_int(
            0, static_cast<int>(eligible.size()) - 1))];
    out.per_expert[producer].push_back(ScoredInstance::create(
        b.category, score, block_mask(spec.width, spec.height, b)));
  }

  CategoryIndex index(scene.categories);
  const std::vector<int32_t>& universe = index.semantic_ids();
  const size_t channels = universe.size();
  std::map<int32_t, size_t> channel_of;
  for (size_t c = 0; c < channels; ++c) channel_of[universe[c]] = c;
  const size_t plane = scene.semantic_gt.labels.size();

  for (int m = 0; m < spec.n_semantic_models; ++m) {
    Rng rng(mix_seed(spec.rng_seed, kStreamSemantic + static_cast<uint64_t>(m)));
    SemanticConfidenceMap map;
    map.width = spec.width;
    map.height = spec.height;
    map.category_ids = universe;
    map.probs.assign(channels * plane, 0.0f);
    for (size_t p = 0; p < plane; ++p) {
      const double flip_draw = rng.uniform();
      const double pick_draw = rng.uniform();
      const int32_t truth = scene.semantic_gt.labels[p];
      if (truth == kVoidLabel) {
        const float fill = 1.0f / static_cast<float>(channels);
        for (size_t c = 0; c < channels; ++c) map.probs[c * plane + p] = fill;
        continue;
      }
      size_t channel = channel_of.at(truth);
      if (flip_draw < deg.semantic_flip_rate && channels > 1) {
        auto other = static_cast<size_t>(pick_draw *
                                         static_cast<double>(channels - 1));
        other = std::min(other, channels - 2);
        if (other >= channel) ++other;
        channel = other;
      }
      map.probs[channel * plane + p] = 1.0f;
    }
    out.semantic_maps.push_back(std::move(map));
  }
  return out;
}

}  // namespace panoptic
