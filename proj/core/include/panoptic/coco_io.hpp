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
// COCO panoptic data model and serialization.
//
// On-disk layout follows the COCO panoptic convention: a JSON file holds
// images, categories and per-image annotations with `segments_info`; the
// per-pixel segment ids live in a companion 8-bit RGB PNG per image, with
// id = R + 256*G + 256^2*B. Instance predictions use the COCO detection
// result schema with RLE `segmentation` (uncompressed integer `counts`,
// row-major as documented in mask.hpp). Semantic label maps reuse the same
// 24-bit PNG id encoding.

#ifndef PANOPTIC_COCO_IO_HPP_
#define PANOPTIC_COCO_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "panoptic/categories.hpp"
#include "panoptic/error.hpp"
#include "panoptic/mask.hpp"

namespace panoptic {

/// One row of a panoptic segment table.
struct SegmentInfo {
  uint32_t id = 0;
  int32_t category_id = 0;
  uint64_t area = 0;
  BBox bbox;
  bool iscrowd = false;

  bool operator==(const SegmentInfo&) const = default;
};

/// A dense panoptic segmentation: per-pixel segment ids (0 = VOID) plus the
/// segment table. Every nonzero id in `id_map` has exactly one entry in
/// `segments` and vice versa; `validate_panoptic` checks this.
struct PanopticImage {
  int width = 0;
  int height = 0;
  std::vector<uint32_t> id_map;
  std::vector<SegmentInfo> segments;

  uint32_t id_at(int x, int y) const {
    return id_map[static_cast<size_t>(y) * width + x];
  }

  bool operator==(const PanopticImage&) const = default;
};

struct ImageRecord {
  int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;

  bool operator==(const ImageRecord&) const = default;
};

/// JSON-side panoptic annotation: the segment table plus the name of the
/// companion PNG.
struct PanopticAnnotation {
  int64_t image_id = 0;
  std::string file_name;
  std::vector<SegmentInfo> segments;

  bool operator==(const PanopticAnnotation&) const = default;
};

struct DatasetManifest {
  std::vector<Category> categories;
  std::vector<ImageRecord> images;
  std::vector<PanopticAnnotation> annotations;

  const ImageRecord& image(int64_t image_id) const;
};

// ---------------------------------------------------------------------------
// Panoptic PNG id codec

/// A per-pixel segment-id raster, decoded from or destined for a PNG.
struct IdRaster {
  int width = 0;
  int height = 0;
  std::vector<uint32_t> ids;

  bool operator==(const IdRaster&) const = default;
};

/// Decodes an 8-bit RGB PNG into segment ids (id = R + 256*G + 256^2*B).
/// Throws Error for non-RGB color types or bit depths other than 8.
IdRaster read_panoptic_png(std::span<const uint8_t> png_bytes);

/// Inverse of read_panoptic_png. All ids must be < 2^24.
std::vector<uint8_t> write_panoptic_png(const IdRaster& raster);

IdRaster read_panoptic_png_file(const std::filesystem::path& path);
void write_panoptic_png_file(const std::filesystem::path& path,
                             const IdRaster& raster);

/// Plain 8-bit RGB PNG encoder (3 bytes per pixel, row-major); used for
/// visualization outputs.
std::vector<uint8_t> encode_rgb_png(int width, int height,
                                    std::span<const uint8_t> rgb);

/// Label maps reuse the 24-bit id encoding (labels must be in [0, 2^24)).
LabelMap read_label_png_file(const std::filesystem::path& path);
void write_label_png_file(const std::filesystem::path& path,
                          const LabelMap& labels);

// ---------------------------------------------------------------------------
// JSON segment table / manifest

DatasetManifest read_manifest(const std::filesystem::path& json_path);
void write_manifest(const std::filesystem::path& json_path,
                    const DatasetManifest& manifest);
DatasetManifest manifest_from_json_string(const std::string& json_text);
std::string manifest_to_json_string(const DatasetManifest& manifest);

/// Combines a JSON annotation with its id PNG into a PanopticImage. The
/// segment table is taken from the annotation as-is; run `validate_panoptic`
/// to check it against the raster.
PanopticImage assemble_panoptic(const PanopticAnnotation& annotation,
                                const IdRaster& raster);

/// Splits a PanopticImage into the JSON/PNG pair.
PanopticAnnotation annotation_from_panoptic(int64_t image_id,
                                            const std::string& file_name,
                                            const PanopticImage& pan);
IdRaster raster_from_panoptic(const PanopticImage& pan);

// ---------------------------------------------------------------------------
// Instance results (COCO detection schema)

/// Parses detection-format results and groups them by image id. Every
/// record needs image_id, category_id, score, and an RLE segmentation whose
/// size matches the image dimensions from the manifest. The stored bbox is
/// recomputed from the mask so the ScoredInstance invariant holds. Records
/// with invalid scores, unknown categories or mismatched RLE sizes raise
/// Error.
std::map<int64_t, std::vector<ScoredInstance>> read_instance_results(
    const std::string& json_text, const DatasetManifest& manifest);

std::map<int64_t, std::vector<ScoredInstance>> read_instance_results_file(
    const std::filesystem::path& path, const DatasetManifest& manifest);

std::string write_instance_results(
    const std::map<int64_t, std::vector<ScoredInstance>>& per_image);
void write_instance_results_file(
    const std::filesystem::path& path,
    const std::map<int64_t, std::vector<ScoredInstance>>& per_image);

// ---------------------------------------------------------------------------
// Conversions and validation

/// Converts a panoptic annotation to a semantic label map: stuff segments
/// keep their category id, every thing segment maps to the merged-thing id,
/// VOID stays VOID. Throws Error on segments with unknown categories.
LabelMap panoptic_to_semantic_gt(const PanopticImage& pan,
                                 std::span<const Category> categories);

/// Checks every PanopticImage invariant: raster/table id agreement, unique
/// segment ids, and per-segment area and bbox fields matching the raster.
ValidationReport validate_panoptic(const PanopticImage& pan);

// ---------------------------------------------------------------------------
// Small file helpers shared by the I/O paths

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

/// Writes via a temp file in the same directory plus an atomic rename, so
/// partially written files are never observed at `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& text);

}  // namespace panoptic

#endif  // PANOPTIC_COCO_IO_HPP_
