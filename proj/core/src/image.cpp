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

#include "smokeynet/image.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "smokeynet/error.hpp"

namespace smokeynet::image {

void TileGeometry::validate() const {
  if (tile_size <= 0 || stride <= 0 || height < tile_size || width < tile_size) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("invalid tile geometry {}x{} tile {} stride {}", height, width, tile_size,
                     stride));
  }
  if (stride > tile_size) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("stride {} exceeds tile size {}: tiles would leave gaps", stride, tile_size));
  }
  if ((height - tile_size) % stride != 0 || (width - tile_size) % stride != 0) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("{}x{} is not exactly tiled by {} px tiles at stride {}", height, width,
                     tile_size, stride));
  }
}

TileGeometry TileGeometry::for_grid(int rows, int cols, int tile_size, int stride) {
  TileGeometry g{tile_size + (rows - 1) * stride, tile_size + (cols - 1) * stride, tile_size,
                 stride};
  g.validate();
  return g;
}

PreparedImage resize_crop(const RawFrame& raw, const TileGeometry& geometry) {
  const cv::Mat& src = raw.pixels;
  if (src.empty() || src.type() != CV_8UC3) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("frame {}{:+d}: expected a non-empty 8-bit RGB image", raw.camera_id,
                     raw.minute_offset));
  }
  cv::Mat resized;
  if (src.cols == geometry.width) {
    resized = src;
  } else {
    const double factor = static_cast<double>(geometry.width) / src.cols;
    const int new_height = static_cast<int>(std::lround(src.rows * factor));
    cv::resize(src, resized, cv::Size(geometry.width, new_height), 0, 0,
               factor < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);
  }
  if (resized.rows < geometry.height) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("frame {}{:+d}: {}x{} too small to produce {}x{}", raw.camera_id,
                     raw.minute_offset, src.rows, src.cols, geometry.height, geometry.width));
  }
  PreparedImage out;
  resized(cv::Rect(0, resized.rows - geometry.height, geometry.width, geometry.height))
      .convertTo(out.pixels, CV_32FC3);
  out.source_offset = raw.minute_offset;
  out.camera_id = raw.camera_id;
  return out;
}

GroundTruthMask resize_crop_mask(const GroundTruthMask& mask, const TileGeometry& geometry) {
  cv::Mat resized;
  if (mask.cols == geometry.width) {
    resized = mask;
  } else {
    const double factor = static_cast<double>(geometry.width) / mask.cols;
    cv::resize(mask, resized,
               cv::Size(geometry.width, static_cast<int>(std::lround(mask.rows * factor))), 0, 0,
               cv::INTER_NEAREST);
  }
  if (resized.rows < geometry.height) {
    fail(ErrorCode::kInvalidArgument, "mask too small for target geometry");
  }
  return resized(cv::Rect(0, resized.rows - geometry.height, geometry.width, geometry.height))
      .clone();
}

std::vector<TileOrigin> tile_origins(const TileGeometry& geometry) {
  geometry.validate();
  std::vector<TileOrigin> origins;
  origins.reserve(static_cast<size_t>(geometry.tile_count()));
  for (int r = 0; r < geometry.rows(); ++r) {
    for (int c = 0; c < geometry.cols(); ++c) {
      origins.push_back({r * geometry.stride, c * geometry.stride});
    }
  }
  return origins;
}

TileGrid tile_image(const PreparedImage& img, const TileGeometry& geometry) {
  if (img.pixels.rows != geometry.height || img.pixels.cols != geometry.width) {
    fail(ErrorCode::kShapeMismatch,
         fmt::format("tile_image: expected {}x{}, got {}x{}", geometry.height, geometry.width,
                     img.pixels.rows, img.pixels.cols));
  }
  TileGrid grid;
  grid.rows = geometry.rows();
  grid.cols = geometry.cols();
  grid.origins = tile_origins(geometry);
  grid.tiles.reserve(grid.origins.size());
  for (const auto& o : grid.origins) {
    grid.tiles.push_back(
        img.pixels(cv::Rect(o.col_px, o.row_px, geometry.tile_size, geometry.tile_size)).clone());
  }
  grid.labels.assign(grid.origins.size(), 0);
  return grid;
}

std::vector<uint8_t> label_tiles(const TileGrid& grid, const GroundTruthMask& mask,
                                 int tile_size, int min_overlap_px) {
  if (mask.type() != CV_8UC1) fail(ErrorCode::kInvalidArgument, "mask must be CV_8UC1");
  const int expected_h = grid.origins.empty() ? 0 : grid.origins.back().row_px + tile_size;
  const int expected_w = grid.origins.empty() ? 0 : grid.origins.back().col_px + tile_size;
  if (mask.rows != expected_h || mask.cols != expected_w) {
    fail(ErrorCode::kShapeMismatch,
         fmt::format("label_tiles: mask {}x{} does not match image {}x{}", mask.rows, mask.cols,
                     expected_h, expected_w));
  }
  std::vector<uint8_t> labels(grid.origins.size(), 0);
  for (size_t i = 0; i < grid.origins.size(); ++i) {
    const auto& o = grid.origins[i];
    const int count = cv::countNonZero(mask(cv::Rect(o.col_px, o.row_px, tile_size, tile_size)));
    labels[i] = count >= min_overlap_px ? 1 : 0;
  }
  return labels;
}

AugmentParams sample_augment(uint64_t seed, int height, int width, const AugmentOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentParams p;
  p.flip = unit(rng) < options.flip_probability;
  p.scale = options.min_scale + (1.0 - options.min_scale) * unit(rng);
  const int h = static_cast<int>(std::lround(height * p.scale));
  const int w = static_cast<int>(std::lround(width * p.scale));
  p.offset_row = static_cast<int>(std::floor(unit(rng) * (height - h + 1)));
  p.offset_col = static_cast<int>(std::floor(unit(rng) * (width - w + 1)));
  p.offset_row = std::min(p.offset_row, height - h);
  p.offset_col = std::min(p.offset_col, width - w);
  p.contrast = 1.0 + options.max_contrast_jitter * (2.0 * unit(rng) - 1.0);
  p.brightness = options.max_brightness_jitter * (2.0 * unit(rng) - 1.0);
  return p;
}

namespace {

cv::Mat apply_geometry(const cv::Mat& src, const AugmentParams& params, int interpolation,
                       int border_mode) {
  cv::Mat work;
  if (params.flip) {
    cv::flip(src, work, 1);
  } else {
    work = src;
  }
  if (params.scale >= 1.0) return work.clone();
  const int h = static_cast<int>(std::lround(src.rows * params.scale));
  const int w = static_cast<int>(std::lround(src.cols * params.scale));
  if (h == src.rows && w == src.cols) return work.clone();
  cv::Mat small;
  cv::resize(work, small, cv::Size(w, h), 0, 0, interpolation);
  cv::Mat out;
  cv::copyMakeBorder(small, out, params.offset_row, src.rows - h - params.offset_row,
                     params.offset_col, src.cols - w - params.offset_col, border_mode,
                     cv::Scalar::all(0));
  return out;
}

}  // namespace

PreparedImage apply_augment(const PreparedImage& img, const AugmentParams& params) {
  if (img.normalized) {
    fail(ErrorCode::kInvalidArgument, "augment expects an unnormalized image");
  }
  PreparedImage out = img;
  out.pixels = apply_geometry(img.pixels, params, cv::INTER_LINEAR, cv::BORDER_REPLICATE);
  if (params.contrast != 1.0 || params.brightness != 0.0) {
    out.pixels.convertTo(out.pixels, CV_32FC3, params.contrast,
                         127.5 * (1.0 - params.contrast) + params.brightness);
    cv::min(out.pixels, 255.0, out.pixels);
    cv::max(out.pixels, 0.0, out.pixels);
  }
  return out;
}

GroundTruthMask apply_augment_mask(const GroundTruthMask& mask, const AugmentParams& params) {
  return apply_geometry(mask, params, cv::INTER_NEAREST, cv::BORDER_CONSTANT);
}

PreparedImage augment(const PreparedImage& img, uint64_t seed, const AugmentOptions& options) {
  if (!options.enabled) return img;
  return apply_augment(img, sample_augment(seed, img.pixels.rows, img.pixels.cols, options));
}

PreparedImage normalize_image(const PreparedImage& img, const ImageNormalization& norm) {
  if (img.normalized) fail(ErrorCode::kInvalidArgument, "image already normalized");
  double lo = 0.0;
  double hi = 0.0;
  cv::minMaxLoc(img.pixels.reshape(1), &lo, &hi);
  if (lo < 0.0 || hi > 255.0) {
    fail(ErrorCode::kInvalidArgument,
         fmt::format("normalize_image: pixel range [{}, {}] outside [0, 255]", lo, hi));
  }
  PreparedImage out = img;
  std::vector<cv::Mat> channels;
  cv::split(img.pixels, channels);
  for (int c = 0; c < 3; ++c) {
    channels[c].convertTo(channels[c], CV_32F, 1.0 / (255.0 * norm.sd[c]),
                          -norm.mean[c] / norm.sd[c]);
  }
  out.pixels = cv::Mat();
  cv::merge(channels, out.pixels);
  out.normalized = true;
  return out;
}

PreparedImage denormalize_image(const PreparedImage& img, const ImageNormalization& norm) {
  if (!img.normalized) fail(ErrorCode::kInvalidArgument, "image is not normalized");
  PreparedImage out = img;
  std::vector<cv::Mat> channels;
  cv::split(img.pixels, channels);
  for (int c = 0; c < 3; ++c) {
    channels[c].convertTo(channels[c], CV_32F, 255.0 * norm.sd[c], 255.0 * norm.mean[c]);
  }
  out.pixels = cv::Mat();
  cv::merge(channels, out.pixels);
  out.normalized = false;
  return out;
}

cv::Mat read_rgb(const std::string& path) {
  cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
  if (bgr.empty()) fail(ErrorCode::kIo, fmt::format("unreadable image '{}'", path));
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return rgb;
}

void write_rgb(const std::string& path, const cv::Mat& rgb, int jpeg_quality) {
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path, bgr, {cv::IMWRITE_JPEG_QUALITY, jpeg_quality})) {
    fail(ErrorCode::kIo, fmt::format("cannot write image '{}'", path));
  }
}

GroundTruthMask read_mask(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (m.empty()) fail(ErrorCode::kIo, fmt::format("unreadable mask '{}'", path));
  return m;
}

void write_mask(const std::string& path, const GroundTruthMask& mask) {
  if (!cv::imwrite(path, mask)) fail(ErrorCode::kIo, fmt::format("cannot write mask '{}'", path));
}

}  // namespace smokeynet::image
