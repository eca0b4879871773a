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

#ifndef PANOPTIC_FUSION_HPP_
#define PANOPTIC_FUSION_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "panoptic/categories.hpp"
#include "panoptic/coco_io.hpp"
#include "panoptic/mask.hpp"

namespace panoptic {

/// Knobs of the greedy instance/semantic combination step.
struct FusionParams {
  /// Instances scoring below this are discarded up front.
  double score_threshold = 0.5;
  /// An instance is dropped when the unclaimed fraction of its mask is at
  /// most (1 - overlap_threshold), i.e. when at least overlap_threshold of
  /// it was already taken by higher-priority instances.
  double overlap_threshold = 0.5;
  /// Stuff segments smaller than this many pixels become VOID.
  uint64_t stuff_area_min = 4096;

  void validate() const;
};

struct FusionStats {
  uint64_t instances_total = 0;
  uint64_t instances_dropped_score = 0;
  uint64_t instances_dropped_overlap = 0;
  uint64_t stuff_segments_dropped = 0;
  uint64_t void_pixels = 0;
  uint64_t total_pixels = 0;

  double void_fraction() const {
    return total_pixels == 0
               ? 0.0
               : static_cast<double>(void_pixels) / total_pixels;
  }
  FusionStats& operator+=(const FusionStats& other);
};

/// Combines instance predictions with a semantic label map into one
/// coherent panoptic image.
///
/// Instances are rasterized greedily in (score desc, mask area desc, input
/// index) order, each claiming the pixels of its mask no earlier instance
/// took; mostly-occluded instances are dropped per `overlap_threshold`.
/// Remaining pixels take their semantic label: each stuff category forms at
/// most one segment per image (disconnected parts share it), small stuff
/// segments are dropped, and merged-thing or VOID semantic pixels stay
/// VOID. Instance segments get ids 1..k in claim order, stuff segments
/// follow in ascending category order.
///
/// The semantic map must only carry stuff ids, the merged-thing id or
/// VOID; instances must have thing categories and masks matching the
/// semantic dimensions.
PanopticImage fuse(std::span<const ScoredInstance> instances,
                   const LabelMap& semantic, const FusionParams& params,
                   std::span<const Category> categories,
                   FusionStats* stats = nullptr);

struct FusionInput {
  int64_t image_id = 0;
  std::vector<ScoredInstance> instances;
  LabelMap semantic;
};

/// Applies fuse per image, optionally fanning out across `parallelism`
/// workers (<= 0 means hardware concurrency). Outputs keep input order and
/// statistics reduce in input order, so results are independent of the
/// worker count. Per-image failures rethrow with the image id attached.
std::vector<PanopticImage> fuse_batch(std::span<const FusionInput> inputs,
                                      const FusionParams& params,
                                      std::span<const Category> categories,
                                      int parallelism = 0,
                                      FusionStats* stats = nullptr);

}  // namespace panoptic

#endif  // PANOPTIC_FUSION_HPP_
