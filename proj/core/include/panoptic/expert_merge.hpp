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

#ifndef PANOPTIC_EXPERT_MERGE_HPP_
#define PANOPTIC_EXPERT_MERGE_HPP_

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "panoptic/categories.hpp"
#include "panoptic/mask.hpp"

namespace panoptic {

/// Assignment of thing categories to category-specialized expert models.
/// Every expert owns an explicit category set except the single expert
/// marked `rest`, which owns whatever thing categories the others leave
/// uncovered.
struct ExpertRouting {
  struct Expert {
    std::string name;
    std::set<int32_t> categories;
    bool rest = false;
  };
  std::vector<Expert> experts;

  /// Ownership with the rest-expert complement filled in. Throws Error if
  /// the routing is malformed (no or multiple rest experts, duplicate
  /// names, overlapping owned sets).
  std::map<std::string, std::set<int32_t>> resolve(
      std::span<const Category> categories) const;
};

/// Keeps, for each expert, exactly the predictions whose category that
/// expert owns; everything else is discarded. Scores pass through
/// unchanged. Output order is deterministic: experts by name, then input
/// order within an expert. Throws Error if the map names an expert missing
/// from the routing.
std::vector<ScoredInstance> merge_expert_predictions(
    const std::map<std::string, std::vector<ScoredInstance>>& per_expert,
    const ExpertRouting& routing, std::span<const Category> categories);

/// Reports overlapping owned sets, thing categories no expert covers, and
/// stuff categories claimed by an expert.
ValidationReport validate_routing(const ExpertRouting& routing,
                                  std::span<const Category> categories);

}  // namespace panoptic

#endif  // PANOPTIC_EXPERT_MERGE_HPP_
