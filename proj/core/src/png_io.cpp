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

#include <png.h>

#include <csetjmp>
#include <cstring>

#include "panoptic/coco_io.hpp"

namespace panoptic {

namespace {

constexpr uint32_t kMaxId = (uint32_t{1} << 24) - 1;

struct MemReader {
  const uint8_t* data;
  size_t size;
  size_t pos;
};

void mem_read(png_structp png, png_bytep out, png_size_t count) {
  auto* reader = static_cast<MemReader*>(png_get_io_ptr(png));
  if (reader->pos + count > reader->size) {
    png_error(png, "unexpected end of PNG stream");
  }
  std::memcpy(out, reader->data + reader->pos, count);
  reader->pos += count;
}

void mem_write(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void mem_flush(png_structp) {}

}  // namespace

IdRaster read_panoptic_png(std::span<const uint8_t> png_bytes) {
  if (png_bytes.size() < 8 ||
      png_sig_cmp(png_bytes.data(), 0, 8) != 0) {
    throw Error("not a PNG stream");
  }

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }

  MemReader reader{png_bytes.data(), png_bytes.size(), 0};
  IdRaster raster;
  std::vector<uint8_t> row;
  std::string failure;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(failure.empty() ? "malformed PNG stream" : failure);
  }

  png_set_read_fn(png, &reader, mem_read);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (color_type != PNG_COLOR_TYPE_RGB || bit_depth != 8) {
    failure = "panoptic PNG must be 8-bit RGB (color type " +
              std::to_string(color_type) + ", depth " +
              std::to_string(bit_depth) + ")";
    longjmp(png_jmpbuf(png), 1);
  }

  raster.width = static_cast<int>(width);
  raster.height = static_cast<int>(height);
  raster.ids.resize(static_cast<size_t>(width) * height);
  row.resize(static_cast<size_t>(width) * 3);

  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    uint32_t* out = raster.ids.data() + static_cast<size_t>(y) * width;
    for (png_uint_32 x = 0; x < width; ++x) {
      const uint32_t r = row[x * 3 + 0];
      const uint32_t g = row[x * 3 + 1];
      const uint32_t b = row[x * 3 + 2];
      out[x] = r + (g << 8) + (b << 16);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return raster;
}

std::vector<uint8_t> encode_rgb_png(int width, int height,
                                    std::span<const uint8_t> rgb) {
  if (width <= 0 || height <= 0 ||
      rgb.size() != static_cast<size_t>(width) * height * 3) {
    throw Error("RGB buffer size does not match dimensions");
  }

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  if (png == nullptr) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }

  std::vector<uint8_t> out;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG encoding failed");
  }

  png_set_write_fn(png, &out, mem_write, mem_flush);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(
                           rgb.data() + static_cast<size_t>(y) * width * 3));
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<uint8_t> write_panoptic_png(const IdRaster& raster) {
  if (raster.width <= 0 || raster.height <= 0 ||
      raster.ids.size() !=
          static_cast<size_t>(raster.width) * raster.height) {
    throw Error("id raster dimensions are inconsistent");
  }
  std::vector<uint8_t> rgb(raster.ids.size() * 3);
  for (size_t i = 0; i < raster.ids.size(); ++i) {
    const uint32_t id = raster.ids[i];
    if (id > kMaxId) {
      throw Error("segment id " + std::to_string(id) +
                  " exceeds the 24-bit PNG encoding");
    }
    rgb[i * 3 + 0] = static_cast<uint8_t>(id & 0xff);
    rgb[i * 3 + 1] = static_cast<uint8_t>((id >> 8) & 0xff);
    rgb[i * 3 + 2] = static_cast<uint8_t>((id >> 16) & 0xff);
  }
  return encode_rgb_png(raster.width, raster.height, rgb);
}

IdRaster read_panoptic_png_file(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  try {
    return read_panoptic_png(bytes);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_panoptic_png_file(const std::filesystem::path& path,
                             const IdRaster& raster) {
  write_file_atomic(path, write_panoptic_png(raster));
}

LabelMap read_label_png_file(const std::filesystem::path& path) {
  const IdRaster raster = read_panoptic_png_file(path);
  LabelMap map;
  map.width = raster.width;
  map.height = raster.height;
  map.labels.assign(raster.ids.begin(), raster.ids.end());
  return map;
}

void write_label_png_file(const std::filesystem::path& path,
                          const LabelMap& labels) {
  IdRaster raster;
  raster.width = labels.width;
  raster.height = labels.height;
  raster.ids.reserve(labels.labels.size());
  for (int32_t label : labels.labels) {
    if (label < 0) {
      throw Error("negative label " + std::to_string(label) +
                  " cannot be PNG-encoded");
    }
    raster.ids.push_back(static_cast<uint32_t>(label));
  }
  write_panoptic_png_file(path, raster);
}

}  // namespace panoptic
