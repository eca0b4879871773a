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

#ifndef PANOPTIC_CATEGORIES_HPP_
#define PANOPTIC_CATEGORIES_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "panoptic/error.hpp"

namespace panoptic {

/// One dataset category. Id 0 is reserved for VOID and never appears in a
/// category set.
struct Category {
  int32_t id = 0;
  std::string name;
  bool is_thing = false;
  std::array<uint8_t, 3> color = {0, 0, 0};
  std::optional<std::string> supercategory;

  bool operator==(const Category&) const = default;
};

/// Id of the synthetic category that stands in for all thing categories in
/// converted semantic annotations: one greater than the largest stuff id.
/// Derived, never part of the category set itself.
int32_t merged_thing_id(std::span<const Category> categories);

/// Deterministic color for an id. The odd multiplier permutes the 24-bit
/// space, so distinct ids below 2^24 always receive distinct colors and
/// only id 0 maps to black (the VOID color).
inline std::array<uint8_t, 3> palette_color(uint32_t id) {
  const uint32_t h = (id * 0x9e3779b1u) & 0xffffffu;
  return {static_cast<uint8_t>(h & 0xff),
          static_cast<uint8_t>((h >> 8) & 0xff),
          static_cast<uint8_t>((h >> 16) & 0xff)};
}

/// Index by id with uniqueness and VOID checks. Throws Error on duplicate
/// ids or an id of 0.
class CategoryIndex {
 public:
  explicit CategoryIndex(std::span<const Category> categories);

  const Category* find(int32_t id) const;
  const Category& at(int32_t id) const;
  bool is_thing(int32_t id) const { return at(id).is_thing; }
  bool is_stuff(int32_t id) const { return !at(id).is_thing; }
  int32_t merged_thing() const { return merged_thing_; }

  /// Stuff ids followed by the merged-thing id, ascending: the label
  /// universe of converted semantic annotations.
  const std::vector<int32_t>& semantic_ids() const { return semantic_ids_; }
  const std::vector<int32_t>& thing_ids() const { return thing_ids_; }

 private:
  std::unordered_map<int32_t, Category> by_id_;
  std::vector<int32_t> thing_ids_;
  std::vector<int32_t> semantic_ids_;
  int32_t merged_thing_ = 0;
};

}  // namespace panoptic

#endif  // PANOPTIC_CATEGORIES_HPP_
