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

#ifndef PANOPTIC_SEMANTIC_ENSEMBLE_HPP_
#define PANOPTIC_SEMANTIC_ENSEMBLE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "panoptic/error.hpp"
#include "panoptic/mask.hpp"

namespace panoptic {

/// Per-pixel, per-category confidence raster emitted by a semantic model.
///
/// Channels cover the semantic label universe (stuff ids plus the
/// merged-thing id). Planes are stored contiguously: the confidence for
/// channel c at pixel (x, y) lives at probs[c * width * height + y * width
/// + x]. Every per-pixel vector across channels is non-negative and sums
/// to 1 within tolerance.
struct SemanticConfidenceMap {
  int width = 0;
  int height = 0;
  std::vector<int32_t> category_ids;
  std::vector<float> probs;

  size_t plane_size() const {
    return static_cast<size_t>(width) * static_cast<size_t>(height);
  }
  float at(size_t channel, int x, int y) const {
    return probs[channel * plane_size() + static_cast<size_t>(y) * width + x];
  }

  /// Checks structure, non-negativity, duplicate-free channel ids, and
  /// per-pixel normalization within `tolerance`.
  void validate(double tolerance = 1e-5) const;
};

struct EnsembleStats {
  /// Number of (input map, pixel) vectors whose sum drifted into
  /// (1e-5, 1e-3] and were renormalized before averaging.
  uint64_t renormalized = 0;
};

/// Unweighted arithmetic mean of the inputs, per pixel and category.
///
/// All maps must share dimensions and an identical category_ids ordering.
/// Per-pixel sums off by more than 1e-3 are rejected; drift in (1e-5,
/// 1e-3] is renormalized and counted in `stats`. Accumulation uses
/// compensated summation in input order, so reordering the inputs moves
/// the result by less than 1e-12.
SemanticConfidenceMap ensemble_average(
    std::span<const SemanticConfidenceMap> maps,
    EnsembleStats* stats = nullptr);

/// Per-pixel category id with maximal confidence; exact ties go to the
/// lowest category id regardless of channel order.
LabelMap argmax_labels(const SemanticConfidenceMap& map);

// ---------------------------------------------------------------------------
// Binary raster container
//
// Little-endian layout:
//   bytes 0..3   magic "PCMF"
//   u32          version (1)
//   u32          width
//   u32          height
//   u32          category count C
//   C x i32      category ids
//   C planes     float32, row-major, width*height each

SemanticConfidenceMap read_confidence_map(std::span<const uint8_t> bytes);
std::vector<uint8_t> write_confidence_map(const SemanticConfidenceMap& map);

SemanticConfidenceMap read_confidence_map_file(
    const std::filesystem::path& path);
void write_confidence_map_file(const std::filesystem::path& path,
                               const SemanticConfidenceMap& map);

}  // namespace panoptic

#endif  // PANOPTIC_SEMANTIC_ENSEMBLE_HPP_
