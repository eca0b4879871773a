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

#include "panoptic/mask.hpp"

#include <algorithm>
#include <limits>

namespace panoptic {

namespace {

// Allocation guard for pathological dimensions. Run arithmetic itself is
// 64-bit throughout.
constexpr uint64_t kMaxPixels = uint64_t{1} << 40;

void check_dimensions(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error("mask dimensions must be positive, got " +
                std::to_string(width) + "x" + std::to_string(height));
  }
  const uint64_t pixels =
      static_cast<uint64_t>(width) * static_cast<uint64_t>(height);
  if (pixels > kMaxPixels) {
    throw Error("mask dimensions overflow: " + std::to_string(width) + "x" +
                std::to_string(height));
  }
}

// Walks the foreground runs of a mask as [begin, end) intervals in linear
// pixel order.
struct ForegroundCursor {
  const std::vector<uint64_t>& runs;
  size_t idx = 0;       // index of the next run to consume
  uint64_t pos = 0;     // linear position where that run starts
  uint64_t begin = 0;   // current foreground interval
  uint64_t end = 0;
  bool done = false;

  explicit ForegroundCursor(const BinaryMask& m) : runs(m.runs) { advance(); }

  void advance() {
    while (idx < runs.size()) {
      const bool foreground = (idx % 2) == 1;
      const uint64_t len = runs[idx];
      if (foreground && len > 0) {
        begin = pos;
        end = pos + len;
        pos += len;
        ++idx;
        return;
      }
      pos += len;
      ++idx;
    }
    done = true;
  }
};

}  // namespace

BinaryMask BinaryMask::encode(int width, int height,
                              std::span<const uint8_t> pixels) {
  check_dimensions(width, height);
  const uint64_t n =
      static_cast<uint64_t>(width) * static_cast<uint64_t>(height);
  if (pixels.size() != n) {
    throw Error("pixel buffer size " + std::to_string(pixels.size()) +
                " does not match " + std::to_string(width) + "x" +
                std::to_string(height));
  }

  BinaryMask mask;
  mask.width = width;
  mask.height = height;
  uint8_t current = 0;  // runs start with background
  uint64_t count = 0;
  for (uint64_t i = 0; i < n; ++i) {
    const uint8_t value = pixels[i] ? 1 : 0;
    if (value != current) {
      mask.runs.push_back(count);
      current = value;
      count = 0;
    }
    ++count;
  }
  mask.runs.push_back(count);
  return mask;
}

std::vector<uint8_t> BinaryMask::decode() const {
  validate();
  std::vector<uint8_t> pixels(pixel_count(), 0);
  uint64_t pos = 0;
  for (size_t i = 0; i < runs.size(); ++i) {
    if (i % 2 == 1) {
      std::fill(pixels.begin() + pos, pixels.begin() + pos + runs[i], 1);
    }
    pos += runs[i];
  }
  return pixels;
}

uint64_t BinaryMask::area() const {
  uint64_t total = 0;
  for (size_t i = 1; i < runs.size(); i += 2) total += runs[i];
  return total;
}

void BinaryMask::validate() const {
  check_dimensions(width, height);
  if (runs.empty()) throw Error("mask has no runs");
  uint64_t sum = 0;
  for (size_t i = 0; i < runs.size(); ++i) {
    if (i > 0 && runs[i] == 0) {
      throw Error("zero-length run at index " + std::to_string(i));
    }
    sum += runs[i];
  }
  if (sum != pixel_count()) {
    throw Error("run sum " + std::to_string(sum) + " does not cover " +
                std::to_string(width) + "x" + std::to_string(height));
  }
}

uint64_t mask_intersection(const BinaryMask& a, const BinaryMask& b) {
  ForegroundCursor ca(a);
  ForegroundCursor cb(b);
  uint64_t inter = 0;
  while (!ca.done && !cb.done) {
    const uint64_t lo = std::max(ca.begin, cb.begin);
    const uint64_t hi = std::min(ca.end, cb.end);
    if (lo < hi) inter += hi - lo;
    if (ca.end <= cb.end) {
      ca.advance();
    } else {
      cb.advance();
    }
  }
  return inter;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw Error("mask dimension mismatch: " + std::to_string(a.width) + "x" +
                std::to_string(a.height) + " vs " + std::to_string(b.width) +
                "x" + std::to_string(b.height));
  }
  const uint64_t inter = mask_intersection(a, b);
  const uint64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double bbox_iou(const BBox& a, const BBox& b) {
  const int64_t ix0 = std::max(a.x, b.x);
  const int64_t iy0 = std::max(a.y, b.y);
  const int64_t ix1 = std::min<int64_t>(a.x + a.w, b.x + b.w);
  const int64_t iy1 = std::min<int64_t>(a.y + a.h, b.y + b.h);
  const int64_t iw = std::max<int64_t>(0, ix1 - ix0);
  const int64_t ih = std::max<int64_t>(0, iy1 - iy0);
  const int64_t inter = iw * ih;
  const int64_t uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BBox tight_bbox(const BinaryMask& mask) {
  const int64_t w = mask.width;
  int64_t min_x = std::numeric_limits<int64_t>::max();
  int64_t min_y = std::numeric_limits<int64_t>::max();
  int64_t max_x = -1;
  int64_t max_y = -1;

  ForegroundCursor cursor(mask);
  if (cursor.done) throw Error("cannot compute bbox of an empty mask");
  for (; !cursor.done; cursor.advance()) {
    const int64_t first = static_cast<int64_t>(cursor.begin);
    const int64_t last = static_cast<int64_t>(cursor.end) - 1;
    const int64_t row0 = first / w;
    const int64_t row1 = last / w;
    min_y = std::min(min_y, row0);
    max_y = std::max(max_y, row1);
    if (row0 == row1) {
      min_x = std::min(min_x, first % w);
      max_x = std::max(max_x, last % w);
    } else {
      // A run spanning rows covers a suffix of its first row and a prefix
      // of its last, so it touches both column extremes.
      min_x = 0;
      max_x = w - 1;
    }
  }
  return BBox{static_cast<int>(min_x), static_cast<int>(min_y),
              static_cast<int>(max_x - min_x + 1),
              static_cast<int>(max_y - min_y + 1)};
}

ScoredInstance ScoredInstance::create(int32_t category_id, double score,
                                      BinaryMask mask) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error("instance score " + std::to_string(score) +
                " outside [0, 1]");
  }
  mask.validate();
  if (mask.area() == 0) {
    throw Error("instance mask has no foreground pixel");
  }
  ScoredInstance instance;
  instance.category_id = category_id;
  instance.score = score;
  instance.bbox = tight_bbox(mask);
  instance.mask = std::move(mask);
  return instance;
}

LabelMap LabelMap::filled(int width, int height, int32_t value) {
  check_dimensions(width, height);
  LabelMap map;
  map.width = width;
  map.height = height;
  map.labels.assign(static_cast<size_t>(width) * height, value);
  return map;
}

}  // namespace panoptic
