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
// Shared helpers and independent oracles. The oracles work on dense
// per-pixel grids with the most literal arithmetic available, so they stay
// independent of the run-based production paths they check.

#ifndef PANOPTIC_TESTS_TEST_SUPPORT_HPP_
#define PANOPTIC_TESTS_TEST_SUPPORT_HPP_

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "panoptic/categories.hpp"
#include "panoptic/coco_io.hpp"
#include "panoptic/mask.hpp"
#include "panoptic/metrics.hpp"
#include "panoptic/synthgen.hpp"

namespace panoptic::testing {

// ---------------------------------------------------------------------------
// Grid and mask construction

inline std::vector<uint8_t> rect_grid(int width, int height, int x, int y,
                                      int w, int h) {
  std::vector<uint8_t> grid(static_cast<size_t>(width) * height, 0);
  for (int yy = y; yy < y + h; ++yy) {
    for (int xx = x; xx < x + w; ++xx) {
      grid[static_cast<size_t>(yy) * width + xx] = 1;
    }
  }
  return grid;
}

inline BinaryMask rect_mask(int width, int height, int x, int y, int w,
                            int h) {
  return BinaryMask::encode(width, height, rect_grid(width, height, x, y, w, h));
}

inline std::vector<uint8_t> random_grid(Rng& rng, int width, int height,
                                        double density = 0.5) {
  std::vector<uint8_t> grid(static_cast<size_t>(width) * height, 0);
  for (auto& p : grid) p = rng.uniform() < density ? 1 : 0;
  return grid;
}

inline std::vector<Category> two_stuff_two_things() {
  return {
      {1, "person", true, {200, 0, 0}, std::nullopt},
      {2, "car", true, {0, 200, 0}, std::nullopt},
      {21, "grass", false, {0, 120, 0}, std::nullopt},
      {22, "sky", false, {0, 0, 220}, std::nullopt},
  };
}

// ---------------------------------------------------------------------------
// Dense oracles for mask arithmetic

inline uint64_t dense_intersection(const std::vector<uint8_t>& a,
                                   const std::vector<uint8_t>& b) {
  uint64_t inter = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) ++inter;
  }
  return inter;
}

inline uint64_t dense_area(const std::vector<uint8_t>& a) {
  uint64_t area = 0;
  for (uint8_t p : a) area += p ? 1 : 0;
  return area;
}

inline double dense_iou(const std::vector<uint8_t>& a,
                        const std::vector<uint8_t>& b) {
  const uint64_t inter = dense_intersection(a, b);
  const uint64_t uni = dense_area(a) + dense_area(b) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Panoptic scene construction from dense id grids

/// Builds a PanopticImage from an id grid and a (segment id -> category,
/// iscrowd) table, computing area/bbox fields from the raster.
inline PanopticImage panoptic_from_grid(
    int width, int height, const std::vector<uint32_t>& ids,
    const std::map<uint32_t, std::pair<int32_t, bool>>& segment_categories) {
  PanopticImage pan;
  pan.width = width;
  pan.height = height;
  pan.id_map = ids;
  struct Extent {
    uint64_t area = 0;
    int min_x = 1 << 30, min_y = 1 << 30, max_x = -1, max_y = -1;
  };
  std::map<uint32_t, Extent> extents;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const uint32_t id = ids[static_cast<size_t>(y) * width + x];
      if (id == 0) continue;
      Extent& e = extents[id];
      ++e.area;
      e.min_x = std::min(e.min_x, x);
      e.min_y = std::min(e.min_y, y);
      e.max_x = std::max(e.max_x, x);
      e.max_y = std::max(e.max_y, y);
    }
  }
  for (const auto& [id, e] : extents) {
    const auto& [category, iscrowd] = segment_categories.at(id);
    pan.segments.push_back(SegmentInfo{
        id, category, e.area,
        BBox{e.min_x, e.min_y, e.max_x - e.min_x + 1, e.max_y - e.min_y + 1},
        iscrowd});
  }
  return pan;
}

// ---------------------------------------------------------------------------
// Brute-force panoptic matching oracle

struct OracleMatch {
  uint32_t gt_id = 0;
  uint32_t pred_id = 0;
  double iou = 0.0;
};

/// All candidate pairs (same category, GT not crowd, IoU > 0.5), with the
/// IoU computed densely and the union stripped of GT VOID pixels inside
/// the pred segment.
inline std::vector<OracleMatch> oracle_candidates(const PanopticImage& gt,
                                                  const PanopticImage& pred) {
  std::vector<OracleMatch> candidates;
  for (const auto& g : gt.segments) {
    if (g.iscrowd) continue;
    for (const auto& d : pred.segments) {
      if (g.category_id != d.category_id) continue;
      uint64_t inter = 0;
      uint64_t void_overlap = 0;
      for (size_t p = 0; p < gt.id_map.size(); ++p) {
        const bool in_pred = pred.id_map[p] == d.id;
        if (gt.id_map[p] == g.id && in_pred) ++inter;
        if (gt.id_map[p] == 0 && in_pred) ++void_overlap;
      }
      const uint64_t uni = g.area + d.area - inter - void_overlap;
      if (uni == 0) continue;
      const double iou = static_cast<double>(inter) / static_cast<double>(uni);
      if (iou > 0.5) candidates.push_back({g.id, d.id, iou});
    }
  }
  return candidates;
}

/// Exhaustive maximum-weight matching over the candidates: every subset
/// that forms a matching is tried. Returns the chosen pairs sorted.
inline std::vector<std::pair<uint32_t, uint32_t>> oracle_best_matching(
    const std::vector<OracleMatch>& candidates) {
  std::vector<size_t> best;
  double best_weight = -1.0;
  std::vector<size_t> chosen;

  const auto conflicts = [&](size_t idx) {
    for (size_t c : chosen) {
      if (candidates[c].gt_id == candidates[idx].gt_id ||
          candidates[c].pred_id == candidates[idx].pred_id) {
        return true;
      }
    }
    return false;
  };
  const auto weight = [&]() {
    double total = 0.0;
    for (size_t c : chosen) total += candidates[c].iou;
    return total;
  };

  // Depth-first over include/exclude decisions; candidate lists stay tiny.
  const std::function<void(size_t)> recurse = [&](size_t idx) {
    if (idx == candidates.size()) {
      const double w = weight();
      if (w > best_weight) {
        best_weight = w;
        best = chosen;
      }
      return;
    }
    if (!conflicts(idx)) {
      chosen.push_back(idx);
      recurse(idx + 1);
      chosen.pop_back();
    }
    recurse(idx + 1);
  };
  recurse(0);

  std::vector<std::pair<uint32_t, uint32_t>> pairs;
  for (size_t c : best) pairs.emplace_back(candidates[c].gt_id, candidates[c].pred_id);
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

/// PqStats derived from the exhaustive matching, replaying the crowd and
/// VOID exemption rules densely.
inline PqStats stats_from_brute_force_matching(const PanopticImage& gt,
                                               const PanopticImage& pred) {
  const auto candidates = oracle_candidates(gt, pred);
  const auto chosen = oracle_best_matching(candidates);

  PqStats stats;
  std::set<uint32_t> matched_gt;
  std::set<uint32_t> matched_pred;
  for (const auto& [gt_id, pred_id] : chosen) {
    for (const auto& c : candidates) {
      if (c.gt_id == gt_id && c.pred_id == pred_id) {
        int32_t category = 0;
        for (const auto& seg : gt.segments) {
          if (seg.id == gt_id) category = seg.category_id;
        }
        PqCategoryStats& s = stats.per_category[category];
        ++s.tp;
        s.iou_sum += c.iou;
      }
    }
    matched_gt.insert(gt_id);
    matched_pred.insert(pred_id);
  }
  for (const auto& seg : gt.segments) {
    if (seg.iscrowd || matched_gt.count(seg.id) > 0) continue;
    ++stats.per_category[seg.category_id].fn;
  }
  for (const auto& seg : pred.segments) {
    if (matched_pred.count(seg.id) > 0) continue;
    uint64_t exempt = 0;
    for (size_t p = 0; p < pred.id_map.size(); ++p) {
      if (pred.id_map[p] != seg.id) continue;
      if (gt.id_map[p] == 0) {
        ++exempt;
        continue;
      }
      for (const auto& g : gt.segments) {
        if (g.id == gt.id_map[p] && g.iscrowd &&
            g.category_id == seg.category_id) {
          ++exempt;
        }
      }
    }
    if (static_cast<double>(exempt) > 0.5 * static_cast<double>(seg.area)) {
      continue;
    }
    ++stats.per_category[seg.category_id].fp;
  }
  return stats;
}

/// Random micro-scene: up to `max_segments` axis-aligned blocks painted in
/// z-order over a VOID background, categories drawn from {1, 2}.
inline PanopticImage random_micro_panoptic(Rng& rng, int width, int height,
                                           int max_segments) {
  std::vector<uint32_t> ids(static_cast<size_t>(width) * height, 0);
  std::map<uint32_t, std::pair<int32_t, bool>> table;
  const int n = rng.uniform_int(0, max_segments);
  uint32_t next_id = 1;
  for (int s = 0; s < n; ++s) {
    const int w = rng.uniform_int(2, std::max(2, width / 2));
    const int h = rng.uniform_int(2, std::max(2, height / 2));
    const int x = rng.uniform_int(0, width - w);
    const int y = rng.uniform_int(0, height - h);
    const uint32_t id = next_id++;
    for (int yy = y; yy < y + h; ++yy) {
      for (int xx = x; xx < x + w; ++xx) {
        ids[static_cast<size_t>(yy) * width + xx] = id;
      }
    }
    table[id] = {rng.uniform_int(0, 1) == 0 ? 1 : 2, false};
  }
  // Later blocks may fully occlude earlier segments; drop the empties.
  std::set<uint32_t> seen(ids.begin(), ids.end());
  for (auto it = table.begin(); it != table.end();) {
    it = seen.count(it->first) == 0 ? table.erase(it) : std::next(it);
  }
  return panoptic_from_grid(width, height, ids, table);
}

// ---------------------------------------------------------------------------
// Single-threshold AP oracle
//
// Flat list of detections with, per detection, the IoU against every GT of
// its image; GTs are consumed greedily in score order by the best-IoU rule.
struct OracleDetection {
  double score = 0.0;
  size_t image = 0;
  std::vector<double> iou_to_gt;  // parallel to that image's GT list
};

inline double oracle_ap(std::vector<OracleDetection> detections,
                        const std::vector<size_t>& gts_per_image,
                        uint64_t total_gt, double threshold) {
  std::stable_sort(detections.begin(), detections.end(),
                   [](const OracleDetection& a, const OracleDetection& b) {
                     return a.score > b.score;
                   });
  std::vector<std::vector<bool>> taken;
  taken.reserve(gts_per_image.size());
  for (size_t n : gts_per_image) taken.emplace_back(n, false);

  std::vector<bool> is_tp;
  for (const auto& det : detections) {
    double best = threshold;
    size_t best_g = det.iou_to_gt.size();
    for (size_t g = 0; g < det.iou_to_gt.size(); ++g) {
      if (taken[det.image][g]) continue;
      if (det.iou_to_gt[g] < best) continue;
      if (best_g != det.iou_to_gt.size() && det.iou_to_gt[g] <= best) continue;
      best = det.iou_to_gt[g];
      best_g = g;
    }
    if (best_g != det.iou_to_gt.size()) {
      taken[det.image][best_g] = true;
      is_tp.push_back(true);
    } else {
      is_tp.push_back(false);
    }
  }

  std::vector<double> precision;
  std::vector<double> recall;
  uint64_t tp = 0;
  for (size_t k = 0; k < is_tp.size(); ++k) {
    if (is_tp[k]) ++tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
  }

  // AP definition: mean over the 101 recall grid points of the maximum
  // precision among operating points with recall >= the grid point.
  double total = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double want = r / 100.0;
    double best_precision = 0.0;
    for (size_t k = 0; k < recall.size(); ++k) {
      if (recall[k] >= want) {
        best_precision = std::max(best_precision, precision[k]);
      }
    }
    total += best_precision;
  }
  return total / 101.0;
}

// ---------------------------------------------------------------------------
// Filesystem scratch space

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("panoptic_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace panoptic::testing

#endif  // PANOPTIC_TESTS_TEST_SUPPORT_HPP_
