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

#ifndef PANOPTIC_METRICS_HPP_
#define PANOPTIC_METRICS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "panoptic/categories.hpp"
#include "panoptic/coco_io.hpp"
#include "panoptic/mask.hpp"

namespace panoptic {

// ---------------------------------------------------------------------------
// Panoptic quality

/// Per-category accumulators behind PQ: IoU sum over matched pairs plus
/// true/false positive and false negative segment counts.
struct PqCategoryStats {
  double iou_sum = 0.0;
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;
};

struct PqStats {
  std::map<int32_t, PqCategoryStats> per_category;

  /// Merges another image's statistics; call in a fixed image order so
  /// floating-point sums stay independent of the worker count.
  PqStats& operator+=(const PqStats& other);
};

/// Matches same-category (gt, pred) segment pairs with IoU > 0.5, where
/// the IoU union excludes GT VOID pixels inside the pred segment; the
/// threshold makes matches unique. GT crowd segments are unmatchable and
/// never count FN; unmatched pred segments escape FP when more than half
/// of their area lies in GT VOID or same-category crowd pixels. Inputs
/// must share dimensions and satisfy the PanopticImage invariants.
/// `matched_pairs`, when given, receives the matched (gt id, pred id)
/// pairs in ascending order.
PqStats pq_match(const PanopticImage& gt, const PanopticImage& pred,
                 std::span<const Category> categories,
                 std::vector<std::pair<uint32_t, uint32_t>>* matched_pairs =
                     nullptr);

struct PqSummary {
  struct Entry {
    double pq = 0.0;
    double sq = 0.0;
    double rq = 0.0;
    double iou_sum = 0.0;
    uint64_t tp = 0;
    uint64_t fp = 0;
    uint64_t fn = 0;
  };
  /// Only categories with tp + fp + fn > 0 participate; others carry no
  /// evidence and would dilute the means with undefined zeros.
  std::map<int32_t, Entry> per_category;
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  size_t n_categories = 0;
};

/// Per category: sq = iou_sum/tp, rq = tp/(tp + fp/2 + fn/2),
/// pq = iou_sum/(tp + fp/2 + fn/2), each 0 where the denominator is 0.
/// Means are unweighted over the participating categories.
PqSummary pq_summarize(const PqStats& stats);

// ---------------------------------------------------------------------------
// Semantic mIoU

struct MiouSummary {
  /// Categories present in the ground truth, id-ascending.
  std::map<int32_t, double> per_category;
  double mean = 0.0;
};

/// Global confusion tally over label maps; GT VOID pixels are excluded
/// entirely. Accumulate any number of images, then summarize.
class ConfusionTally {
 public:
  void accumulate(const LabelMap& gt, const LabelMap& pred);
  MiouSummary miou() const;

  uint64_t count(int32_t gt_label, int32_t pred_label) const;

 private:
  std::map<std::pair<int32_t, int32_t>, uint64_t> counts_;
};

/// Single-pair convenience wrapper around ConfusionTally.
MiouSummary miou(const LabelMap& gt, const LabelMap& pred);

// ---------------------------------------------------------------------------
// COCO-style mAP

enum class MatchMode { kBbox, kMask };

struct MapSummary {
  /// Categories with at least one GT instance, id-ascending.
  std::map<int32_t, double> ap_per_category;
  double map = 0.0;
};

/// Mean average precision over IoU thresholds 0.50:0.05:0.95 with
/// 101-point interpolated AP, greedy score-descending matching to the
/// best unmatched GT, and at most 100 detections per image. GT scores are
/// ignored. `gt_per_image` and `pred_per_image` must be parallel.
MapSummary coco_map(std::span<const std::vector<ScoredInstance>> gt_per_image,
                    std::span<const std::vector<ScoredInstance>> pred_per_image,
                    MatchMode mode);

// ---------------------------------------------------------------------------
// Reports

/// Bundle of whatever metrics a run produced. Values stay in [0, 1]
/// internally; the serializers scale to the conventional x100 form.
struct MetricReport {
  std::optional<PqSummary> pq;
  std::optional<MiouSummary> miou;
  std::optional<MapSummary> map_bbox;
  std::optional<MapSummary> map_mask;
};

std::string metric_report_json(const MetricReport& report,
                               std::span<const Category> categories);
std::string metric_report_table(const MetricReport& report,
                                std::span<const Category> categories);

}  // namespace panoptic

#endif  // PANOPTIC_METRICS_HPP_
