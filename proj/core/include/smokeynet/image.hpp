/* Copyright 2026 The SmokeyNet Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace smokeynet::image {

// Image size plus the overlapping tile layout cut from it.
struct TileGeometry {
  int height = 1040;
  int width = 1856;
  int tile_size = 224;
  int stride = 204;

  int rows() const { return (height - tile_size) / stride + 1; }
  int cols() const { return (width - tile_size) / stride + 1; }
  int tile_count() const { return rows() * cols(); }

  // Throws unless the tiles cover the image exactly (last tile flush with
  // both edges) with non-negative overlap.
  void validate() const;

  // Smallest image that a rows x cols grid of this tile/stride covers exactly.
  static TileGeometry for_grid(int rows, int cols, int tile_size, int stride);
};

inline constexpr TileGeometry kFullScaleGeometry{};

struct RawFrame {
  std::string camera_id;
  int minute_offset = 0;  // minutes relative to ignition, in [-40, 39]
  cv::Mat pixels;         // CV_8UC3, RGB
  bool label = false;     // smoke present <=> minute_offset >= 0
};

struct PreparedImage {
  cv::Mat pixels;  // CV_32FC3; 0..255 before normalize_image, z-scored after
  int source_offset = 0;
  std::string camera_id;
  bool normalized = false;
};

// Binary smoke mask, CV_8UC1 with nonzero = smoke.
using GroundTruthMask = cv::Mat;

struct TileOrigin {
  int row_px = 0;
  int col_px = 0;
};

struct TileGrid {
  int rows = 0;
  int cols = 0;
  std::vector<cv::Mat> tiles;  // row-major, each tile_size x tile_size CV_32FC3
  std::vector<TileOrigin> origins;
  std::vector<uint8_t> labels;

  size_t size() const { return tiles.size(); }
};

/// Resize to the target width preserving aspect ratio, then keep the bottom
/// `geometry.height` rows.
PreparedImage resize_crop(const RawFrame& raw, const TileGeometry& geometry);
// Same transform for a mask (nearest-neighbour resampling).
GroundTruthMask resize_crop_mask(const GroundTruthMask& mask, const TileGeometry& geometry);

TileGrid tile_image(const PreparedImage& img, const TileGeometry& geometry);
std::vector<TileOrigin> tile_origins(const TileGeometry& geometry);

/// Tile label is true iff at least `min_overlap_px` mask pixels fall inside it.
std::vector<uint8_t> label_tiles(const TileGrid& grid, const GroundTruthMask& mask,
                                 int tile_size, int min_overlap_px = 1);

struct AugmentParams {
  bool flip = false;
  double scale = 1.0;  // in [0.9, 1.0]
  int offset_row = 0;  // placement of the shrunken image on the canvas
  int offset_col = 0;
  double contrast = 1.0;
  double brightness = 0.0;
};

struct AugmentOptions {
  bool enabled = true;
  double min_scale = 0.9;
  double flip_probability = 0.5;
  double max_contrast_jitter = 0.1;
  double max_brightness_jitter = 10.0;
};

AugmentParams sample_augment(uint64_t seed, int height, int width, const AugmentOptions& options);
PreparedImage apply_augment(const PreparedImage& img, const AugmentParams& params);
GroundTruthMask apply_augment_mask(const GroundTruthMask& mask, const AugmentParams& params);

// Convenience: sample + apply; identity when disabled.
PreparedImage augment(const PreparedImage& img, uint64_t seed, const AugmentOptions& options);

struct ImageNormalization {
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> sd{0.229, 0.224, 0.225};
};

/// Per-channel (x/255 - mean) / sd.
PreparedImage normalize_image(const PreparedImage& img, const ImageNormalization& norm = {});
PreparedImage denormalize_image(const PreparedImage& img, const ImageNormalization& norm = {});

cv::Mat read_rgb(const std::string& path);
void write_rgb(const std::string& path, const cv::Mat& rgb, int jpeg_quality = 95);
GroundTruthMask read_mask(const std::string& path);
void write_mask(const std::string& path, const GroundTruthMask& mask);

}  // namespace smokeynet::image
