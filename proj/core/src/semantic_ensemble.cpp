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

#include "panoptic/semantic_ensemble.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>

#include "panoptic/coco_io.hpp"

namespace panoptic {

namespace {

static_assert(std::endian::native == std::endian::little,
              "confidence map container assumes a little-endian host");

constexpr char kMagic[4] = {'P', 'C', 'M', 'F'};
constexpr uint32_t kVersion = 1;
constexpr double kRejectTolerance = 1e-3;
constexpr double kRenormTolerance = 1e-5;

struct Kahan {
  double sum = 0.0;
  double carry = 0.0;

  void add(double value) {
    const double y = value - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

uint32_t read_u32(const uint8_t* p) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

}  // namespace

void SemanticConfidenceMap::validate(double tolerance) const {
  if (width <= 0 || height <= 0) {
    throw Error("confidence map dimensions must be positive");
  }
  if (category_ids.empty()) {
    throw Error("confidence map has no category channels");
  }
  std::set<int32_t> seen(category_ids.begin(), category_ids.end());
  if (seen.size() != category_ids.size()) {
    throw Error("confidence map has duplicate category ids");
  }
  const size_t plane = plane_size();
  if (probs.size() != plane * category_ids.size()) {
    throw Error("confidence map buffer size does not match dimensions");
  }
  for (float p : probs) {
    if (!(p >= 0.0f) || !std::isfinite(p)) {
      throw Error("confidence map contains a negative or non-finite value");
    }
  }
  for (size_t pix = 0; pix < plane; ++pix) {
    double sum = 0.0;
    for (size_t c = 0; c < category_ids.size(); ++c) {
      sum += probs[c * plane + pix];
    }
    if (std::abs(sum - 1.0) > tolerance) {
      throw Error("pixel " + std::to_string(pix) + " sums to " +
                  std::to_string(sum) + ", outside tolerance " +
                  std::to_string(tolerance));
    }
  }
}

SemanticConfidenceMap ensemble_average(
    std::span<const SemanticConfidenceMap> maps, EnsembleStats* stats) {
  if (maps.empty()) throw Error("ensemble needs at least one map");
  const SemanticConfidenceMap& first = maps.front();
  for (const auto& m : maps) {
    if (m.width != first.width || m.height != first.height) {
      throw Error("ensemble input dimensions differ");
    }
    if (m.category_ids != first.category_ids) {
      throw Error("ensemble inputs disagree on category channels");
    }
  }

  const size_t plane = first.plane_size();
  const size_t channels = first.category_ids.size();
  const auto k = static_cast<double>(maps.size());

  SemanticConfidenceMap out;
  out.width = first.width;
  out.height = first.height;
  out.category_ids = first.category_ids;
  out.probs.resize(plane * channels);

  std::vector<Kahan> acc(channels);
  uint64_t renormalized = 0;
  for (size_t pix = 0; pix < plane; ++pix) {
    for (auto& a : acc) a = Kahan{};
    for (const auto& m : maps) {
      double pixel_sum = 0.0;
      for (size_t c = 0; c < channels; ++c) {
        pixel_sum += m.probs[c * plane + pix];
      }
      if (std::abs(pixel_sum - 1.0) > kRejectTolerance) {
        throw Error("ensemble input pixel " + std::to_string(pix) +
                    " sums to " + std::to_string(pixel_sum) +
                    ", beyond the rejection tolerance");
      }
      double scale = 1.0;
      if (std::abs(pixel_sum - 1.0) > kRenormTolerance) {
        scale = 1.0 / pixel_sum;
        ++renormalized;
      }
      for (size_t c = 0; c < channels; ++c) {
        acc[c].add(static_cast<double>(m.probs[c * plane + pix]) * scale);
      }
    }
    for (size_t c = 0; c < channels; ++c) {
      out.probs[c * plane + pix] = static_cast<float>(acc[c].sum / k);
    }
  }
  if (stats != nullptr) stats->renormalized = renormalized;
  return out;
}

LabelMap argmax_labels(const SemanticConfidenceMap& map) {
  const size_t plane = map.plane_size();
  const size_t channels = map.category_ids.size();
  if (channels == 0) throw Error("confidence map has no category channels");

  LabelMap out;
  out.width = map.width;
  out.height = map.height;
  out.labels.resize(plane);
  for (size_t pix = 0; pix < plane; ++pix) {
    float best = -std::numeric_limits<float>::infinity();
    int32_t best_id = std::numeric_limits<int32_t>::max();
    for (size_t c = 0; c < channels; ++c) {
      const float p = map.probs[c * plane + pix];
      const int32_t id = map.category_ids[c];
      if (p > best || (p == best && id < best_id)) {
        best = p;
        best_id = id;
      }
    }
    out.labels[pix] = best_id;
  }
  return out;
}

SemanticConfidenceMap read_confidence_map(std::span<const uint8_t> bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error("not a confidence map container");
  }
  const uint32_t version = read_u32(bytes.data() + 4);
  if (version != kVersion) {
    throw Error("unsupported confidence map version " +
                std::to_string(version));
  }
  SemanticConfidenceMap map;
  map.width = static_cast<int>(read_u32(bytes.data() + 8));
  map.height = static_cast<int>(read_u32(bytes.data() + 12));
  const uint32_t channels = read_u32(bytes.data() + 16);
  if (map.width <= 0 || map.height <= 0 || channels == 0) {
    throw Error("confidence map header has degenerate dimensions");
  }
  const size_t plane =
      static_cast<size_t>(map.width) * static_cast<size_t>(map.height);
  const size_t expected = 20 + channels * 4 + channels * plane * 4;
  if (bytes.size() != expected) {
    throw Error("confidence map size " + std::to_string(bytes.size()) +
                " does not match header (expected " +
                std::to_string(expected) + ")");
  }
  map.category_ids.resize(channels);
  std::memcpy(map.category_ids.data(), bytes.data() + 20, channels * 4);
  map.probs.resize(channels * plane);
  std::memcpy(map.probs.data(), bytes.data() + 20 + channels * 4,
              channels * plane * 4);
  map.validate(kRejectTolerance);
  return map;
}

std::vector<uint8_t> write_confidence_map(const SemanticConfidenceMap& map) {
  map.validate(kRejectTolerance);
  const size_t plane = map.plane_size();
  const size_t channels = map.category_ids.size();
  std::vector<uint8_t> bytes(20 + channels * 4 + channels * plane * 4);
  std::memcpy(bytes.data(), kMagic, 4);
  const uint32_t version = kVersion;
  const uint32_t w = static_cast<uint32_t>(map.width);
  const uint32_t h = static_cast<uint32_t>(map.height);
  const uint32_t c = static_cast<uint32_t>(channels);
  std::memcpy(bytes.data() + 4, &version, 4);
  std::memcpy(bytes.data() + 8, &w, 4);
  std::memcpy(bytes.data() + 12, &h, 4);
  std::memcpy(bytes.data() + 16, &c, 4);
  std::memcpy(bytes.data() + 20, map.category_ids.data(), channels * 4);
  std::memcpy(bytes.data() + 20 + channels * 4, map.probs.data(),
              channels * plane * 4);
  return bytes;
}

SemanticConfidenceMap read_confidence_map_file(
    const std::filesystem::path& path) {
  try {
    return read_confidence_map(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_confidence_map_file(const std::filesystem::path& path,
                               const SemanticConfidenceMap& map) {
  write_file_atomic(path, write_confidence_map(map));
}

}  // namespace panoptic
