#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "epr/tensor.hpp"

namespace epr {

using ImagePtr = std::shared_ptr<const Tensor>;

/// Axis-aligned box. `x` is the top row, `y` the left column, `w` the extent
/// along rows and `h` the extent along columns.
struct Box {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long area() const noexcept { return static_cast<long>(w) * h; }
  friend bool operator==(const Box&, const Box&) = default;
};

double intersection_over_union(const Box& a, const Box& b);

struct LabeledSplit {
  std::vector<ImagePtr> images;
  std::vector<int> labels;
  /// Ground-truth object boxes; empty for datasets without annotations.
  std::vector<Box> boxes;

  std::size_t size() const noexcept { return images.size(); }
};

/// In-memory image classification dataset, images stored (C, W, W) in [0, 1].
struct Dataset {
  std::string name;
  int channels = 3;
  int width = 32;
  int n_classes = 0;
  LabeledSplit train;
  LabeledSplit test;
};

}  // namespace epr
