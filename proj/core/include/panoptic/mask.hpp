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

#ifndef PANOPTIC_MASK_HPP_
#define PANOPTIC_MASK_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "panoptic/error.hpp"

namespace panoptic {

/// Reserved label / segment id for pixels with no assignment.
inline constexpr int32_t kVoidLabel = 0;

/// Run-length encoded binary raster.
///
/// Pixels are linearized row-major (the pixel at (x, y) has index
/// y * width + x). `runs` holds alternating background/foreground run
/// lengths starting with a background run; a mask whose first pixel is
/// foreground starts with a zero-length background run. The run lengths
/// always sum to width * height and no run after the first is empty.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<uint64_t> runs;

  /// Encodes a row-major grid of 0/1 pixel values. Throws Error on
  /// non-positive or oversized dimensions.
  static BinaryMask encode(int width, int height,
                           std::span<const uint8_t> pixels);

  /// Expands to a row-major grid of 0/1 values. Throws Error if the
  /// mask is malformed.
  std::vector<uint8_t> decode() const;

  /// Number of foreground pixels, computed from the runs alone.
  uint64_t area() const;

  uint64_t pixel_count() const {
    return static_cast<uint64_t>(width) * static_cast<uint64_t>(height);
  }

  /// Throws Error if any BinaryMask invariant is violated.
  void validate() const;

  bool operator==(const BinaryMask&) const = default;
};

/// Axis-aligned box; (x, y) is the top-left corner, extents are in pixels.
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int64_t area() const { return static_cast<int64_t>(w) * h; }
  bool operator==(const BBox&) const = default;
};

/// |a ∩ b| computed directly on the run lists.
uint64_t mask_intersection(const BinaryMask& a, const BinaryMask& b);

/// Intersection over union of two same-sized masks. IoU of two empty
/// masks is defined as 0. Throws Error on dimension mismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

/// Rectangle intersection over union. Degenerate zero-area boxes yield 0.
double bbox_iou(const BBox& a, const BBox& b);

/// Tight bounding box of the mask foreground. Throws Error if the mask
/// has no foreground pixel.
BBox tight_bbox(const BinaryMask& mask);

/// One detected object. `bbox` always equals the tight bounding box of
/// the mask foreground; build instances through `create` to keep that so.
struct ScoredInstance {
  int32_t category_id = 0;
  double score = 0.0;
  BinaryMask mask;
  BBox bbox;

  /// Validates score ∈ [0, 1] and a non-empty mask, derives the bbox.
  static ScoredInstance create(int32_t category_id, double score,
                               BinaryMask mask);
};

/// Per-pixel category labels, row-major. Label 0 is VOID.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int32_t> labels;

  static LabelMap filled(int width, int height, int32_t value);

  int32_t at(int x, int y) const {
    return labels[static_cast<size_t>(y) * width + x];
  }

  bool operator==(const LabelMap&) const = default;
};

}  // namespace panoptic

#endif  // PANOPTIC_MASK_HPP_
