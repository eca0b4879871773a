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

#include "panoptic/coco_io.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace panoptic {

namespace {

using nlohmann::json;

int64_t as_int64(const json& j, const char* what) {
  if (j.is_number_integer() || j.is_number_unsigned()) {
    return j.get<int64_t>();
  }
  if (j.is_number_float()) {
    const double d = j.get<double>();
    return static_cast<int64_t>(std::llround(d));
  }
  throw Error(std::string(what) + " is not a number");
}

BBox bbox_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw Error("bbox must be a 4-element array");
  }
  return BBox{static_cast<int>(as_int64(j[0], "bbox.x")),
              static_cast<int>(as_int64(j[1], "bbox.y")),
              static_cast<int>(as_int64(j[2], "bbox.w")),
              static_cast<int>(as_int64(j[3], "bbox.h"))};
}

json bbox_to_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

SegmentInfo segment_from_json(const json& j) {
  SegmentInfo seg;
  seg.id = static_cast<uint32_t>(as_int64(j.at("id"), "segment id"));
  seg.category_id =
      static_cast<int32_t>(as_int64(j.at("category_id"), "category_id"));
  seg.area = static_cast<uint64_t>(as_int64(j.at("area"), "area"));
  seg.bbox = bbox_from_json(j.at("bbox"));
  seg.iscrowd = as_int64(j.value("iscrowd", json(0)), "iscrowd") != 0;
  return seg;
}

json segment_to_json(const SegmentInfo& seg) {
  return json{{"id", seg.id},
              {"category_id", seg.category_id},
              {"area", seg.area},
              {"bbox", bbox_to_json(seg.bbox)},
              {"iscrowd", seg.iscrowd ? 1 : 0}};
}

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error("failed to parse " + what + " as JSON");
  return j;
}

}  // namespace

const ImageRecord& DatasetManifest::image(int64_t image_id) const {
  for (const auto& rec : images) {
    if (rec.id == image_id) return rec;
  }
  throw Error("image id " + std::to_string(image_id) +
              " not present in manifest");
}

DatasetManifest manifest_from_json_string(const std::string& json_text) {
  const json root = parse_json(json_text, "manifest");
  DatasetManifest manifest;

  for (const auto& jc : root.value("categories", json::array())) {
    Category cat;
    cat.id = static_cast<int32_t>(as_int64(jc.at("id"), "category id"));
    cat.name = jc.at("name").get<std::string>();
    cat.is_thing = as_int64(jc.value("isthing", json(0)), "isthing") != 0;
    if (jc.contains("color")) {
      const auto& jcol = jc.at("color");
      for (int i = 0; i < 3; ++i) {
        cat.color[i] =
            static_cast<uint8_t>(as_int64(jcol.at(i), "color channel"));
      }
    }
    if (jc.contains("supercategory")) {
      cat.supercategory = jc.at("supercategory").get<std::string>();
    }
    manifest.categories.push_back(std::move(cat));
  }

  std::unordered_set<int64_t> image_ids;
  for (const auto& ji : root.value("images", json::array())) {
    ImageRecord rec;
    rec.id = as_int64(ji.at("id"), "image id");
    rec.file_name = ji.at("file_name").get<std::string>();
    rec.width = static_cast<int>(as_int64(ji.at("width"), "image width"));
    rec.height = static_cast<int>(as_int64(ji.at("height"), "image height"));
    if (!image_ids.insert(rec.id).second) {
      throw Error("duplicate image id " + std::to_string(rec.id));
    }
    manifest.images.push_back(std::move(rec));
  }

  for (const auto& ja : root.value("annotations", json::array())) {
    PanopticAnnotation ann;
    ann.image_id = as_int64(ja.at("image_id"), "annotation image_id");
    ann.file_name = ja.at("file_name").get<std::string>();
    for (const auto& js : ja.at("segments_info")) {
      ann.segments.push_back(segment_from_json(js));
    }
    if (image_ids.find(ann.image_id) == image_ids.end()) {
      throw Error("annotation references unknown image id " +
                  std::to_string(ann.image_id));
    }
    manifest.annotations.push_back(std::move(ann));
  }
  return manifest;
}

std::string manifest_to_json_string(const DatasetManifest& manifest) {
  json root;
  root["categories"] = json::array();
  for (const auto& cat : manifest.categories) {
    json jc{{"id", cat.id},
            {"name", cat.name},
            {"isthing", cat.is_thing ? 1 : 0},
            {"color", json::array({cat.color[0], cat.color[1], cat.color[2]})}};
    if (cat.supercategory) jc["supercategory"] = *cat.supercategory;
    root["categories"].push_back(std::move(jc));
  }
  root["images"] = json::array();
  for (const auto& rec : manifest.images) {
    root["images"].push_back(json{{"id", rec.id},
                                  {"file_name", rec.file_name},
                                  {"width", rec.width},
                                  {"height", rec.height}});
  }
  root["annotations"] = json::array();
  for (const auto& ann : manifest.annotations) {
    json segments = json::array();
    for (const auto& seg : ann.segments) segments.push_back(segment_to_json(seg));
    root["annotations"].push_back(json{{"image_id", ann.image_id},
                                       {"file_name", ann.file_name},
                                       {"segments_info", std::move(segments)}});
  }
  return root.dump(2) + "\n";
}

DatasetManifest read_manifest(const std::filesystem::path& json_path) {
  try {
    return manifest_from_json_string(read_file_text(json_path));
  } catch (const Error& e) {
    throw Error(json_path.string() + ": " + e.what());
  }
}

void write_manifest(const std::filesystem::path& json_path,
                    const DatasetManifest& manifest) {
  write_file_atomic(json_path, manifest_to_json_string(manifest));
}

PanopticImage assemble_panoptic(const PanopticAnnotation& annotation,
                                const IdRaster& raster) {
  PanopticImage pan;
  pan.width = raster.width;
  pan.height = raster.height;
  pan.id_map = raster.ids;
  pan.segments = annotation.segments;
  return pan;
}

PanopticAnnotation annotation_from_panoptic(int64_t image_id,
                                            const std::string& file_name,
                                            const PanopticImage& pan) {
  PanopticAnnotation ann;
  ann.image_id = image_id;
  ann.file_name = file_name;
  ann.segments = pan.segments;
  return ann;
}

IdRaster raster_from_panoptic(const PanopticImage& pan) {
  return IdRaster{pan.width, pan.height, pan.id_map};
}

std::map<int64_t, std::vector<ScoredInstance>> read_instance_results(
    const std::string& json_text, const DatasetManifest& manifest) {
  const json root = parse_json(json_text, "instance results");
  if (!root.is_array()) throw Error("instance results must be a JSON array");

  std::unordered_map<int64_t, const ImageRecord*> images;
  for (const auto& rec : manifest.images) images.emplace(rec.id, &rec);
  CategoryIndex index(manifest.categories);

  std::map<int64_t, std::vector<ScoredInstance>> per_image;
  size_t record_index = 0;
  for (const auto& jr : root) {
    const std::string where = "record " + std::to_string(record_index++);
    const int64_t image_id = as_int64(jr.at("image_id"), "image_id");
    auto img_it = images.find(image_id);
    if (img_it == images.end()) {
      throw Error(where + ": unknown image id " + std::to_string(image_id));
    }
    const ImageRecord& img = *img_it->second;

    const auto category_id =
        static_cast<int32_t>(as_int64(jr.at("category_id"), "category_id"));
    if (index.find(category_id) == nullptr) {
      throw Error(where + ": unknown category id " +
                  std::to_string(category_id));
    }
    const double score = jr.at("score").get<double>();
    if (!(score >= 0.0 && score <= 1.0)) {
      throw Error(where + ": score " + std::to_string(score) +
                  " outside [0, 1]");
    }

    const json& seg = jr.at("segmentation");
    const json& size = seg.at("size");
    const int h = static_cast<int>(as_int64(size.at(0), "size[0]"));
    const int w = static_cast<int>(as_int64(size.at(1), "size[1]"));
    if (w != img.width || h != img.height) {
      throw Error(where + ": RLE size " + std::to_string(w) + "x" +
                  std::to_string(h) + " does not match image " +
                  std::to_string(img.width) + "x" +
                  std::to_string(img.height));
    }
    BinaryMask mask;
    mask.width = w;
    mask.height = h;
    for (const auto& count : seg.at("counts")) {
      const int64_t c = as_int64(count, "counts entry");
      if (c < 0) throw Error(where + ": negative run length");
      mask.runs.push_back(static_cast<uint64_t>(c));
    }
    try {
      mask.validate();
      per_image[image_id].push_back(
          ScoredInstance::create(category_id, score, std::move(mask)));
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
  }
  return per_image;
}

std::map<int64_t, std::vector<ScoredInstance>> read_instance_results_file(
    const std::filesystem::path& path, const DatasetManifest& manifest) {
  try {
    return read_instance_results(read_file_text(path), manifest);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string write_instance_results(
    const std::map<int64_t, std::vector<ScoredInstance>>& per_image) {
  json root = json::array();
  for (const auto& [image_id, instances] : per_image) {
    for (const auto& inst : instances) {
      json counts = json::array();
      for (uint64_t run : inst.mask.runs) counts.push_back(run);
      root.push_back(
          json{{"image_id", image_id},
               {"category_id", inst.category_id},
               {"score", inst.score},
               {"bbox", bbox_to_json(inst.bbox)},
               {"segmentation",
                json{{"size", json::array({inst.mask.height, inst.mask.width})},
                     {"counts", std::move(counts)}}}});
    }
  }
  return root.dump(2) + "\n";
}

void write_instance_results_file(
    const std::filesystem::path& path,
    const std::map<int64_t, std::vector<ScoredInstance>>& per_image) {
  write_file_atomic(path, write_instance_results(per_image));
}

LabelMap panoptic_to_semantic_gt(const PanopticImage& pan,
                                 std::span<const Category> categories) {
  CategoryIndex index(categories);
  const int32_t merged = index.merged_thing();

  std::unordered_map<uint32_t, int32_t> label_of_segment;
  label_of_segment.reserve(pan.segments.size());
  for (const auto& seg : pan.segments) {
    const Category* cat = index.find(seg.category_id);
    if (cat == nullptr) {
      throw Error("segment " + std::to_string(seg.id) +
                  " has unknown category " + std::to_string(seg.category_id));
    }
    label_of_segment[seg.id] = cat->is_thing ? merged : cat->id;
  }

  LabelMap out;
  out.width = pan.width;
  out.height = pan.height;
  out.labels.resize(pan.id_map.size());
  uint32_t last_id = 0;
  int32_t last_label = kVoidLabel;
  for (size_t i = 0; i < pan.id_map.size(); ++i) {
    const uint32_t id = pan.id_map[i];
    if (id == 0) {
      out.labels[i] = kVoidLabel;
      continue;
    }
    if (id != last_id) {
      auto it = label_of_segment.find(id);
      if (it == label_of_segment.end()) {
        throw Error("raster id " + std::to_string(id) +
                    " missing from segment table");
      }
      last_id = id;
      last_label = it->second;
    }
    out.labels[i] = last_label;
  }
  return out;
}

ValidationReport validate_panoptic(const PanopticImage& pan) {
  ValidationReport report;
  if (pan.width <= 0 || pan.height <= 0) {
    report.add("image", "non-positive dimensions");
    return report;
  }
  if (pan.id_map.size() != static_cast<size_t>(pan.width) * pan.height) {
    report.add("image", "id_map size does not match dimensions");
    return report;
  }

  std::unordered_map<uint32_t, const SegmentInfo*> table;
  for (const auto& seg : pan.segments) {
    if (seg.id == 0) {
      report.add("segment 0", "id 0 is reserved for VOID");
      continue;
    }
    if (!table.emplace(seg.id, &seg).second) {
      report.add("segment " + std::to_string(seg.id), "duplicate segment id");
    }
  }

  struct Extent {
    uint64_t area = 0;
    int min_x = std::numeric_limits<int>::max();
    int min_y = std::numeric_limits<int>::max();
    int max_x = -1;
    int max_y = -1;
  };
  std::unordered_map<uint32_t, Extent> observed;
  for (int y = 0; y < pan.height; ++y) {
    for (int x = 0; x < pan.width; ++x) {
      const uint32_t id = pan.id_map[static_cast<size_t>(y) * pan.width + x];
      if (id == 0) continue;
      Extent& e = observed[id];
      ++e.area;
      e.min_x = std::min(e.min_x, x);
      e.min_y = std::min(e.min_y, y);
      e.max_x = std::max(e.max_x, x);
      e.max_y = std::max(e.max_y, y);
    }
  }

  for (const auto& [id, extent] : observed) {
    if (table.find(id) == table.end()) {
      report.add("segment " + std::to_string(id),
                 "present in raster but missing from segment table");
    }
  }
  for (const auto& [id, seg] : table) {
    auto it = observed.find(id);
    if (it == observed.end()) {
      report.add("segment " + std::to_string(id),
                 "listed in segment table but absent from raster");
      continue;
    }
    const Extent& e = it->second;
    if (seg->area != e.area) {
      report.add("segment " + std::to_string(id),
                 "area field " + std::to_string(seg->area) +
                     " does not match raster area " + std::to_string(e.area));
    }
    const BBox actual{e.min_x, e.min_y, e.max_x - e.min_x + 1,
                      e.max_y - e.min_y + 1};
    if (!(seg->bbox == actual)) {
      report.add("segment " + std::to_string(id),
                 "bbox field does not match raster extent");
    }
  }

  // Stable order for reporting and tests.
  std::sort(report.violations.begin(), report.violations.end(),
            [](const Violation& a, const Violation& b) {
              return std::tie(a.context, a.message) <
                     std::tie(b.context, b.message);
            });
  return report;
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw Error("read failed for " + path.string());
  return bytes;
}

std::string read_file_text(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const uint8_t> bytes) {
  static std::atomic<uint64_t> counter{0};
  const std::filesystem::path tmp =
      path.string() + ".tmp." + std::to_string(::getpid()) + "." +
      std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw Error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("rename to " + path.string() + " failed: " + ec.message());
  }
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& text) {
  write_file_atomic(
      path, std::span<const uint8_t>(
                reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

}  // namespace panoptic
