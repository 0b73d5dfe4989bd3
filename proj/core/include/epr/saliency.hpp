#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "epr/model.hpp"

namespace epr {

/// Row-major 2-D array of doubles.
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(int r, int c, double fill = 0.0)
      : rows(r), cols(c), values(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  double min() const;
  double max() const;
};

/// Non-negative relevance map at input resolution for one (image, class).
struct SaliencyMap {
  Grid values;
  int source_class = 0;  // head-local class index
  int source_task = 0;
};

/// Gradient maps averaged over both spatial axes, one weight per feature map.
std::vector<double> importance_weights(const TargetCapture& capture);

/// ReLU of the weight-combined activation maps, shaped (u, v).
Grid localization_map(std::span<const double> weights, const Tensor& activations);

/// Bilinear resize with half-pixel centres and edge clamping.
Grid upsample_bilinear(const Grid& map, int rows, int cols);

/// Grad-CAM saliency for a (C, W, W) image and a head-local class index.
SaliencyMap generate_saliency(MultiHeadModel& model, const Tensor& image, int class_index, int task_id);

/// Writes a heatmap PNG plus a JSON record (class, task, min, max).
void dump_saliency(const SaliencyMap& map, const std::filesystem::path& png_path,
                   const std::filesystem::path& json_path);

}  // namespace epr
