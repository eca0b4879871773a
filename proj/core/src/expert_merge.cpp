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

#include "panoptic/expert_merge.hpp"

#include <algorithm>

namespace panoptic {

std::map<std::string, std::set<int32_t>> ExpertRouting::resolve(
    std::span<const Category> categories) const {
  std::map<std::string, std::set<int32_t>> owned;
  const Expert* rest_expert = nullptr;
  std::set<int32_t> claimed;

  for (const auto& expert : experts) {
    if (owned.find(expert.name) != owned.end()) {
      throw Error("duplicate expert name '" + expert.name + "'");
    }
    if (expert.rest) {
      if (rest_expert != nullptr) {
        throw Error("routing has more than one rest expert");
      }
      if (!expert.categories.empty()) {
        throw Error("rest expert '" + expert.name +
                    "' must not list explicit categories");
      }
      rest_expert = &expert;
      owned[expert.name] = {};
      continue;
    }
    for (int32_t id : expert.categories) {
      if (!claimed.insert(id).second) {
        throw Error("category " + std::to_string(id) +
                    " owned by more than one expert");
      }
    }
    owned[expert.name] = expert.categories;
  }

  if (rest_expert != nullptr) {
    std::set<int32_t>& rest = owned[rest_expert->name];
    for (const auto& cat : categories) {
      if (cat.is_thing && claimed.find(cat.id) == claimed.end()) {
        rest.insert(cat.id);
      }
    }
  }
  return owned;
}

std::vector<ScoredInstance> merge_expert_predictions(
    const std::map<std::string, std::vector<ScoredInstance>>& per_expert,
    const ExpertRouting& routing, std::span<const Category> categories) {
  const auto owned = routing.resolve(categories);
  for (const auto& [name, unused] : per_expert) {
    if (owned.find(name) == owned.end()) {
      throw Error("predictions from expert '" + name +
                  "' not present in routing");
    }
  }

  std::vector<ScoredInstance> merged;
  // std::map iterates experts in name order; input order is preserved
  // within each expert.
  for (const auto& [name, instances] : per_expert) {
    const std::set<int32_t>& categories_owned = owned.at(name);
    for (const auto& instance : instances) {
      if (categories_owned.find(instance.category_id) !=
          categories_owned.end()) {
        merged.push_back(instance);
      }
    }
  }
  return merged;
}

ValidationReport validate_routing(const ExpertRouting& routing,
                                  std::span<const Category> categories) {
  ValidationReport report;
  CategoryIndex index(categories);

  std::map<int32_t, std::vector<std::string>> owners;
  std::set<std::string> names;
  int rest_count = 0;
  for (const auto& expert : routing.experts) {
    if (!names.insert(expert.name).second) {
      report.add("routing", "duplicate expert name '" + expert.name + "'");
    }
    if (expert.rest) {
      ++rest_count;
      if (!expert.categories.empty()) {
        report.add("expert " + expert.name,
                   "rest expert lists explicit categories");
      }
      continue;
    }
    for (int32_t id : expert.categories) {
      owners[id].push_back(expert.name);
      const Category* cat = index.find(id);
      if (cat == nullptr) {
        report.add("expert " + expert.name,
                   "claims unknown category " + std::to_string(id));
      } else if (!cat->is_thing) {
        report.add("expert " + expert.name,
                   "claims stuff category " + std::to_string(id));
      }
    }
  }

  if (rest_count > 1) {
    report.add("routing", "more than one rest expert");
  }
  for (const auto& [id, names_for_id] : owners) {
    if (names_for_id.size() > 1) {
      std::string joined;
      for (const auto& n : names_for_id) {
        if (!joined.empty()) joined += ", ";
        joined += n;
      }
      report.add("category " + std::to_string(id),
                 "owned by multiple experts: " + joined);
    }
  }
  if (rest_count == 0) {
    for (int32_t id : index.thing_ids()) {
      if (owners.find(id) == owners.end()) {
        report.add("category " + std::to_string(id),
                   "thing category not covered by any expert");
      }
    }
  }
  return report;
}

}  // namespace panoptic
