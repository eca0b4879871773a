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

#include "panoptic/categories.hpp"

#include <algorithm>

namespace panoptic {

int32_t merged_thing_id(std::span<const Category> categories) {
  int32_t max_stuff = 0;
  for (const auto& c : categories) {
    if (!c.is_thing) max_stuff = std::max(max_stuff, c.id);
  }
  if (max_stuff == 0) {
    throw Error("category set has no stuff category; merged-thing id is "
                "undefined");
  }
  return max_stuff + 1;
}

CategoryIndex::CategoryIndex(std::span<const Category> categories) {
  std::vector<int32_t> stuff_ids;
  for (const auto& c : categories) {
    if (c.id == 0) throw Error("category id 0 is reserved for VOID");
    if (c.id < 0) throw Error("negative category id " + std::to_string(c.id));
    if (!by_id_.emplace(c.id, c).second) {
      throw Error("duplicate category id " + std::to_string(c.id));
    }
    (c.is_thing ? thing_ids_ : stuff_ids).push_back(c.id);
  }
  std::sort(thing_ids_.begin(), thing_ids_.end());
  std::sort(stuff_ids.begin(), stuff_ids.end());
  if (!stuff_ids.empty()) {
    merged_thing_ = stuff_ids.back() + 1;
    semantic_ids_ = stuff_ids;
    semantic_ids_.push_back(merged_thing_);
  }
}

const Category* CategoryIndex::find(int32_t id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &it->second;
}

const Category& CategoryIndex::at(int32_t id) const {
  const Category* c = find(id);
  if (c == nullptr) throw Error("unknown category id " + std::to_string(id));
  return *c;
}

}  // namespace panoptic
