#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "epr/tensor.hpp"

namespace epr {

struct Grid;

/// 8-bit interleaved RGB raster.
struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage() = default;
  RgbImage(int r, int c, std::uint8_t fill = 255)
      : rows(r), cols(c), rgb(static_cast<std::size_t>(r) * static_cast<std::size_t>(c) * 3, fill) {}

  void set(int r, int c, std::uint8_t red, std::uint8_t green, std::uint8_t blue);
};

void write_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_png(const std::filesystem::path& path);

/// (C, H, W) tensor in [0, 1] to RGB; single-channel tensors become grey.
RgbImage tensor_to_rgb(const Tensor& image);

/// Min-max normalised blue-to-red heatmap of a grid.
RgbImage heatmap_rgb(const Grid& grid);

}  // namespace epr
