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
//
// Synthetic scenes with exact ground truth and controllable degradation.
// Things are axis-aligned blocks rasterized in z-order over a stuff
// background split into vertical bands, so areas and IoUs stay
// hand-computable. All randomness flows through the explicit generator
// below; a seed fully determines a scene.

#ifndef PANOPTIC_SYNTHGEN_HPP_
#define PANOPTIC_SYNTHGEN_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "panoptic/categories.hpp"
#include "panoptic/coco_io.hpp"
#include "panoptic/expert_merge.hpp"
#include "panoptic/mask.hpp"
#include "panoptic/semantic_ensemble.hpp"

namespace panoptic {

/// splitmix64 generator. The algorithm is pinned here so identical seeds
/// give identical scenes on every platform; nothing uses implementation
/// defined library distributions.
struct Rng {
  uint64_t state = 0;

  explicit Rng(uint64_t seed) : state(seed) {}

  uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  /// Standard normal via Box-Muller; always consumes two draws.
  double gaussian();
};

/// Derives an independent stream from a base seed.
uint64_t mix_seed(uint64_t seed, uint64_t stream);

struct Degradation {
  int boundary_erosion_px = 0;
  double false_positive_rate = 0.0;
  double drop_rate = 0.0;
  double score_noise_sigma = 0.0;
  double semantic_flip_rate = 0.0;

  void validate() const;
};

struct SceneSpec {
  int width = 640;
  int height = 480;
  int n_things = 6;
  std::vector<int32_t> thing_categories = {1, 2, 3};
  std::vector<int32_t> stuff_categories = {101, 102, 103};
  uint64_t rng_seed = 0;
  Degradation degradation;
  int n_stuff_regions = 3;
  int thing_min_extent = 20;
  int thing_max_extent = 80;
  int n_semantic_models = 3;

  void validate() const;
};

/// The category table implied by a spec's pools, id-ascending.
std::vector<Category> scene_categories(const SceneSpec& spec);

struct SyntheticScene {
  std::vector<Category> categories;
  PanopticImage panoptic;
  LabelMap semantic_gt;
  /// Thing ground truth in z-order, visible pixels only, score 1.0.
  std::vector<ScoredInstance> instances;
};

/// Deterministic from spec.rng_seed. Throws Error when a requested thing
/// cannot keep a single visible pixel (the scene is over-packed).
SyntheticScene generate_gt(const SceneSpec& spec);

/// Degraded model outputs derived from a scene:
///   - per-expert instance predictions: GT instances eroded / dropped /
///     score-noised and attributed to the expert owning their category,
///     plus round(false_positive_rate * n_things) random block false
///     positives attributed to an expert that does NOT own their category
///     (so expert routing can filter them out);
///   - n_semantic_models one-hot confidence maps of the semantic GT with
///     per-pixel label flips at semantic_flip_rate.
/// Every quantity draws from its own seed-derived stream, so raising one
/// degradation rate leaves everything else untouched.
struct DegradedOutputs {
  std::map<std::string, std::vector<ScoredInstance>> per_expert;
  std::vector<SemanticConfidenceMap> semantic_maps;
};

DegradedOutputs degrade(const SyntheticScene& scene, const SceneSpec& spec,
                        const ExpertRouting& routing);

/// Morphological erosion with a square structuring element of radius
/// `radius` (Chebyshev); pixels outside the image count as background.
BinaryMask erode_mask(const BinaryMask& mask, int radius);

}  // namespace panoptic

#endif  // PANOPTIC_SYNTHGEN_HPP_
