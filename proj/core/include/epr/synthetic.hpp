#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "epr/dataset.hpp"

namespace epr {

struct SyntheticOptions {
  int n_classes = 8;
  int per_class_train = 100;
  int per_class_test = 20;
  int width = 32;
  /// Background pixels are uniform in [0, background_noise].
  float background_noise = 1.0f;
  std::uint64_t seed = 1;
};

/// Glyph dataset with known object locations: every image is uniform
/// background noise plus one class-specific glyph (shape and colour unique
/// to the class) drawn in a W/2 x W/2 square at a random position. The
/// glyph square is recorded as the ground-truth box.
Dataset generate_synthetic_dataset(const SyntheticOptions& options);

/// Binary glyph mask of side `side` for a class, row-major.
std::vector<std::uint8_t> glyph_mask(int label, int side);

/// RGB colour of a class glyph.
std::array<float, 3> glyph_color(int label);

}  // namespace epr
