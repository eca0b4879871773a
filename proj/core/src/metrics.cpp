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

#include "panoptic/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace panoptic {

namespace {

constexpr int kNumIouThresholds = 10;   // 0.50, 0.55, ..., 0.95
constexpr int kNumRecallPoints = 101;   // 0.00, 0.01, ..., 1.00
constexpr size_t kMaxDetectionsPerImage = 100;

uint64_t pair_key(uint32_t gt_id, uint32_t pred_id) {
  return (static_cast<uint64_t>(gt_id) << 32) | pred_id;
}

}  // namespace

PqStats& PqStats::operator+=(const PqStats& other) {
  for (const auto& [cat, s] : other.per_category) {
    PqCategoryStats& mine = per_category[cat];
    mine.iou_sum += s.iou_sum;
    mine.tp += s.tp;
    mine.fp += s.fp;
    mine.fn += s.fn;
  }
  return *this;
}

PqStats pq_match(const PanopticImage& gt, const PanopticImage& pred,
                 std::span<const Category> categories,
                 std::vector<std::pair<uint32_t, uint32_t>>* matched_pairs) {
  if (gt.width != pred.width || gt.height != pred.height) {
    throw Error("gt and pred dimensions differ");
  }
  CategoryIndex index(categories);

  std::unordered_map<uint32_t, const SegmentInfo*> gt_segments;
  std::unordered_map<uint32_t, const SegmentInfo*> pred_segments;
  for (const auto& seg : gt.segments) {
    index.at(seg.category_id);
    gt_segments.emplace(seg.id, &seg);
  }
  for (const auto& seg : pred.segments) {
    index.at(seg.category_id);
    pred_segments.emplace(seg.id, &seg);
  }

  // Intersection areas for every (gt id, pred id) pixel pair, VOID included.
  std::unordered_map<uint64_t, uint64_t> intersections;
  intersections.reserve(gt.segments.size() + pred.segments.size() + 1);
  for (size_t p = 0; p < gt.id_map.size(); ++p) {
    ++intersections[pair_key(gt.id_map[p], pred.id_map[p])];
  }

  auto intersection_of = [&](uint32_t gt_id, uint32_t pred_id) -> uint64_t {
    auto it = intersections.find(pair_key(gt_id, pred_id));
    return it == intersections.end() ? 0 : it->second;
  };

  // Sorted pair order keeps the double accumulation deterministic.
  std::vector<std::pair<uint64_t, uint64_t>> pairs(intersections.begin(),
                                                   intersections.end());
  std::sort(pairs.begin(), pairs.end());

  PqStats stats;
  std::unordered_set<uint32_t> matched_gt;
  std::unordered_set<uint32_t> matched_pred;
  for (const auto& [key, inter] : pairs) {
    const auto gt_id = static_cast<uint32_t>(key >> 32);
    const auto pred_id = static_cast<uint32_t>(key & 0xffffffffu);
    if (gt_id == 0 || pred_id == 0) continue;
    auto git = gt_segments.find(gt_id);
    auto pit = pred_segments.find(pred_id);
    if (git == gt_segments.end()) {
      throw Error("gt raster id " + std::to_string(gt_id) +
                  " missing from segment table");
    }
    if (pit == pred_segments.end()) {
      throw Error("pred raster id " + std::to_string(pred_id) +
                  " missing from segment table");
    }
    const SegmentInfo& g = *git->second;
    const SegmentInfo& d = *pit->second;
    if (g.iscrowd) continue;
    if (g.category_id != d.category_id) continue;
    const uint64_t void_overlap = intersection_of(0, pred_id);
    const uint64_t union_area = g.area + d.area - inter - void_overlap;
    const double iou =
        static_cast<double>(inter) / static_cast<double>(union_area);
    if (iou > 0.5) {
      PqCategoryStats& s = stats.per_category[g.category_id];
      ++s.tp;
      s.iou_sum += iou;
      matched_gt.insert(gt_id);
      matched_pred.insert(pred_id);
      if (matched_pairs != nullptr) {
        matched_pairs->emplace_back(gt_id, pred_id);
      }
    }
  }

  std::unordered_map<int32_t, std::vector<uint32_t>> crowd_ids_by_category;
  for (const auto& seg : gt.segments) {
    if (seg.iscrowd) {
      crowd_ids_by_category[seg.category_id].push_back(seg.id);
    } else if (matched_gt.find(seg.id) == matched_gt.end()) {
      ++stats.per_category[seg.category_id].fn;
    }
  }

  for (const auto& seg : pred.segments) {
    if (matched_pred.find(seg.id) != matched_pred.end()) continue;
    uint64_t exempt = intersection_of(0, seg.id);
    auto cit = crowd_ids_by_category.find(seg.category_id);
    if (cit != crowd_ids_by_category.end()) {
      for (uint32_t crowd_id : cit->second) {
        exempt += intersection_of(crowd_id, seg.id);
      }
    }
    if (static_cast<double>(exempt) > 0.5 * static_cast<double>(seg.area)) {
      continue;
    }
    ++stats.per_category[seg.category_id].fp;
  }
  return stats;
}

PqSummary pq_summarize(const PqStats& stats) {
  PqSummary summary;
  double pq_sum = 0.0;
  double sq_sum = 0.0;
  double rq_sum = 0.0;
  for (const auto& [cat, s] : stats.per_category) {
    if (s.tp + s.fp + s.fn == 0) continue;
    PqSummary::Entry entry;
    entry.iou_sum = s.iou_sum;
    entry.tp = s.tp;
    entry.fp = s.fp;
    entry.fn = s.fn;
    const double denom = static_cast<double>(s.tp) +
                         static_cast<double>(s.fp) / 2.0 +
                         static_cast<double>(s.fn) / 2.0;
    entry.sq = s.tp > 0 ? s.iou_sum / static_cast<double>(s.tp) : 0.0;
    entry.rq = denom > 0.0 ? static_cast<double>(s.tp) / denom : 0.0;
    entry.pq = denom > 0.0 ? s.iou_sum / denom : 0.0;
    pq_sum += entry.pq;
    sq_sum += entry.sq;
    rq_sum += entry.rq;
    summary.per_category.emplace(cat, entry);
  }
  summary.n_categories = summary.per_category.size();
  if (summary.n_categories > 0) {
    const auto n = static_cast<double>(summary.n_categories);
    summary.pq = pq_sum / n;
    summary.sq = sq_sum / n;
    summary.rq = rq_sum / n;
  }
  return summary;
}

void ConfusionTally::accumulate(const LabelMap& gt, const LabelMap& pred) {
  if (gt.width != pred.width || gt.height != pred.height) {
    throw Error("gt and pred label map dimensions differ");
  }
  for (size_t p = 0; p < gt.labels.size(); ++p) {
    const int32_t g = gt.labels[p];
    if (g == kVoidLabel) continue;
    ++counts_[{g, pred.labels[p]}];
  }
}

uint64_t ConfusionTally::count(int32_t gt_label, int32_t pred_label) const {
  auto it = counts_.find({gt_label, pred_label});
  return it == counts_.end() ? 0 : it->second;
}

MiouSummary ConfusionTally::miou() const {
  std::map<int32_t, uint64_t> gt_total;
  std::map<int32_t, uint64_t> pred_total;
  for (const auto& [pair, count] : counts_) {
    gt_total[pair.first] += count;
    pred_total[pair.second] += count;
  }

  MiouSummary summary;
  double sum = 0.0;
  for (const auto& [cat, gt_pixels] : gt_total) {
    const uint64_t inter = count(cat, cat);
    auto pit = pred_total.find(cat);
    const uint64_t pred_pixels = pit == pred_total.end() ? 0 : pit->second;
    const uint64_t union_pixels = gt_pixels + pred_pixels - inter;
    const double iou =
        union_pixels == 0
            ? 0.0
            : static_cast<double>(inter) / static_cast<double>(union_pixels);
    summary.per_category.emplace(cat, iou);
    sum += iou;
  }
  if (!summary.per_category.empty()) {
    summary.mean = sum / static_cast<double>(summary.per_category.size());
  }
  return summary;
}

MiouSummary miou(const LabelMap& gt, const LabelMap& pred) {
  ConfusionTally tally;
  tally.accumulate(gt, pred);
  return tally.miou();
}

namespace {

struct DetectionOutcome {
  double score = 0.0;
  size_t image = 0;
  size_t index = 0;
  bool matched = false;
};

// AP from the cumulated precision/recall sequence via the 101-point
// interpolation with a monotone precision envelope.
double interpolated_ap(std::vector<double> precision,
                       const std::vector<double>& recall) {
  for (size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double total = 0.0;
  for (int r = 0; r < kNumRecallPoints; ++r) {
    const double want = static_cast<double>(r) / (kNumRecallPoints - 1);
    const auto it = std::lower_bound(recall.begin(), recall.end(), want);
    if (it != recall.end()) {
      total += precision[static_cast<size_t>(it - recall.begin())];
    }
  }
  return total / kNumRecallPoints;
}

}  // namespace

MapSummary coco_map(std::span<const std::vector<ScoredInstance>> gt_per_image,
                    std::span<const std::vector<ScoredInstance>> pred_per_image,
                    MatchMode mode) {
  if (gt_per_image.size() != pred_per_image.size()) {
    throw Error("gt and pred image lists differ in length");
  }
  const size_t n_images = gt_per_image.size();

  auto pair_iou = [mode](const ScoredInstance& d, const ScoredInstance& g) {
    return mode == MatchMode::kBbox ? bbox_iou(d.bbox, g.bbox)
                                    : mask_iou(d.mask, g.mask);
  };

  // Top detections per image by score, ties by input order.
  std::vector<std::vector<size_t>> kept(n_images);
  for (size_t img = 0; img < n_images; ++img) {
    auto& order = kept[img];
    order.resize(pred_per_image[img].size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return pred_per_image[img][a].score > pred_per_image[img][b].score;
    });
    if (order.size() > kMaxDetectionsPerImage) {
      order.resize(kMaxDetectionsPerImage);
    }
  }

  std::map<int32_t, uint64_t> gt_count;
  for (const auto& gts : gt_per_image) {
    for (const auto& g : gts) ++gt_count[g.category_id];
  }

  MapSummary summary;
  double ap_total = 0.0;
  for (const auto& [cat, npig] : gt_count) {
    double ap_over_thresholds = 0.0;
    for (int ti = 0; ti < kNumIouThresholds; ++ti) {
      const double threshold = 0.5 + 0.05 * ti;
      std::vector<DetectionOutcome> outcomes;
      for (size_t img = 0; img < n_images; ++img) {
        const auto& gts = gt_per_image[img];
        std::vector<size_t> gt_idx;
        for (size_t g = 0; g < gts.size(); ++g) {
          if (gts[g].category_id == cat) gt_idx.push_back(g);
        }
        std::vector<bool> gt_taken(gt_idx.size(), false);
        for (size_t d : kept[img]) {
          const ScoredInstance& det = pred_per_image[img][d];
          if (det.category_id != cat) continue;
          DetectionOutcome outcome;
          outcome.score = det.score;
          outcome.image = img;
          outcome.index = d;
          double best = threshold;
          size_t best_g = gt_idx.size();
          for (size_t gi = 0; gi < gt_idx.size(); ++gi) {
            if (gt_taken[gi]) continue;
            const double iou = pair_iou(det, gts[gt_idx[gi]]);
            if (iou < best) continue;
            if (best_g != gt_idx.size() && iou <= best) continue;
            best = iou;
            best_g = gi;
          }
          if (best_g != gt_idx.size()) {
            gt_taken[best_g] = true;
            outcome.matched = true;
          }
          outcomes.push_back(outcome);
        }
      }
      std::sort(outcomes.begin(), outcomes.end(),
                [](const DetectionOutcome& a, const DetectionOutcome& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.image != b.image) return a.image < b.image;
                  return a.index < b.index;
                });
      std::vector<double> precision(outcomes.size());
      std::vector<double> recall(outcomes.size());
      uint64_t tp = 0;
      for (size_t k = 0; k < outcomes.size(); ++k) {
        if (outcomes[k].matched) ++tp;
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(tp) / static_cast<double>(npig);
      }
      ap_over_thresholds += interpolated_ap(std::move(precision), recall);
    }
    const double ap = ap_over_thresholds / kNumIouThresholds;
    summary.ap_per_category.emplace(cat, ap);
    ap_total += ap;
  }
  if (!summary.ap_per_category.empty()) {
    summary.map =
        ap_total / static_cast<double>(summary.ap_per_category.size());
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

using nlohmann::json;

std::string category_name(int32_t id, const CategoryIndex& index) {
  const Category* cat = index.find(id);
  if (cat != nullptr) return cat->name;
  if (!index.semantic_ids().empty() && id == index.merged_thing()) {
    return "merged-thing";
  }
  return "unknown";
}

double scaled(double v) { return v * 100.0; }

json pq_subset_json(const PqSummary& summary, const CategoryIndex& index,
                    int want_thing) {
  double pq = 0.0, sq = 0.0, rq = 0.0;
  size_t n = 0;
  for (const auto& [cat, entry] : summary.per_category) {
    const Category* c = index.find(cat);
    const bool is_thing = c != nullptr && c->is_thing;
    if (static_cast<int>(is_thing) != want_thing) continue;
    pq += entry.pq;
    sq += entry.sq;
    rq += entry.rq;
    ++n;
  }
  if (n > 0) {
    pq /= static_cast<double>(n);
    sq /= static_cast<double>(n);
    rq /= static_cast<double>(n);
  }
  return json{{"pq", scaled(pq)},
              {"sq", scaled(sq)},
              {"rq", scaled(rq)},
              {"n", n}};
}

std::string format_row(const std::string& label, double pq, double sq,
                       double rq, size_t n) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "  %-20s %8.2f %8.2f %8.2f %6zu\n",
                label.c_str(), pq, sq, rq, n);
  return buf;
}

}  // namespace

std::string metric_report_json(const MetricReport& report,
                               std::span<const Category> categories) {
  CategoryIndex index(categories);
  json root;
  if (report.pq) {
    const PqSummary& s = *report.pq;
    json per_category = json::object();
    for (const auto& [cat, entry] : s.per_category) {
      per_category[std::to_string(cat)] =
          json{{"name", category_name(cat, index)},
               {"pq", scaled(entry.pq)},
               {"sq", scaled(entry.sq)},
               {"rq", scaled(entry.rq)},
               {"tp", entry.tp},
               {"fp", entry.fp},
               {"fn", entry.fn}};
    }
    root["pq"] = json{{"all",
                       json{{"pq", scaled(s.pq)},
                            {"sq", scaled(s.sq)},
                            {"rq", scaled(s.rq)},
                            {"n", s.n_categories}}},
                      {"things", pq_subset_json(s, index, 1)},
                      {"stuff", pq_subset_json(s, index, 0)},
                      {"per_category", std::move(per_category)}};
  }
  if (report.miou) {
    json per_category = json::object();
    for (const auto& [cat, iou] : report.miou->per_category) {
      per_category[std::to_string(cat)] =
          json{{"name", category_name(cat, index)}, {"iou", scaled(iou)}};
    }
    root["miou"] = json{{"mean", scaled(report.miou->mean)},
                        {"per_category", std::move(per_category)}};
  }
  auto map_json = [&](const MapSummary& s) {
    json per_category = json::object();
    for (const auto& [cat, ap] : s.ap_per_category) {
      per_category[std::to_string(cat)] =
          json{{"name", category_name(cat, index)}, {"ap", scaled(ap)}};
    }
    return json{{"map", scaled(s.map)},
                {"per_category", std::move(per_category)}};
  };
  if (report.map_bbox) root["map_bbox"] = map_json(*report.map_bbox);
  if (report.map_mask) root["map_mask"] = map_json(*report.map_mask);
  return root.dump(2) + "\n";
}

std::string metric_report_table(const MetricReport& report,
                                std::span<const Category> categories) {
  CategoryIndex index(categories);
  std::string out;
  char buf[160];
  if (report.pq) {
    const PqSummary& s = *report.pq;
    out += "panoptic quality\n";
    out += "  category                   PQ       SQ       RQ      N\n";
    out += format_row("all", scaled(s.pq), scaled(s.sq), scaled(s.rq),
                      s.n_categories);
    const json things = pq_subset_json(s, index, 1);
    const json stuff = pq_subset_json(s, index, 0);
    out += format_row("things", things["pq"].get<double>(),
                      things["sq"].get<double>(), things["rq"].get<double>(),
                      things["n"].get<size_t>());
    out += format_row("stuff", stuff["pq"].get<double>(),
                      stuff["sq"].get<double>(), stuff["rq"].get<double>(),
                      stuff["n"].get<size_t>());
    for (const auto& [cat, entry] : s.per_category) {
      out += format_row(category_name(cat, index), scaled(entry.pq),
                        scaled(entry.sq), scaled(entry.rq), 1);
    }
  }
  if (report.miou) {
    out += "semantic segmentation\n";
    std::snprintf(buf, sizeof(buf), "  mIoU %8.2f\n",
                  scaled(report.miou->mean));
    out += buf;
    for (const auto& [cat, iou] : report.miou->per_category) {
      std::snprintf(buf, sizeof(buf), "  %-20s %8.2f\n",
                    category_name(cat, index).c_str(), scaled(iou));
      out += buf;
    }
  }
  if (report.map_bbox || report.map_mask) {
    out += "instance segmentation\n";
    if (report.map_bbox) {
      std::snprintf(buf, sizeof(buf), "  mAP (bbox) %8.2f\n",
                    scaled(report.map_bbox->map));
      out += buf;
    }
    if (report.map_mask) {
      std::snprintf(buf, sizeof(buf), "  mAP (mask) %8.2f\n",
                    scaled(report.map_mask->map));
      out += buf;
    }
  }
  return out;
}

}  // namespace panoptic
