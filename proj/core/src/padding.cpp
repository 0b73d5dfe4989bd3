#include "epr/padding.hpp"

#include <stdexcept>

#include "epr/packing.hpp"

namespace epr {
namespace {

void check_fits(const MemoryPatch& patch, int x, int y, int width, int height) {
  const int wp = patch.width();
  if (patch.pixels.rank() != 3 || wp < 1 || x < 0 || y < 0 || x + wp > height || y + wp > width) {
    throw std::out_of_range("patch of width " + std::to_string(wp) + " at (" + std::to_string(x) + ", " +
                            std::to_string(y) + ") does not fit a " + std::to_string(height) + "x" +
                            std::to_string(width) + " image");
  }
}

void paste(const Tensor& pixels, int x, int y, Tensor& canvas) {
  const int c = pixels.dim(0), wp = pixels.dim(1);
  for (int ch = 0; ch < c; ++ch) {
    for (int r = 0; r < wp; ++r) {
      for (int col = 0; col < wp; ++col) canvas.at(ch, x + r, y + col) = pixels.at(ch, r, col);
    }
  }
}

}  // namespace

Tensor zero_pad(const MemoryPatch& patch, int width, int height) {
  check_fits(patch, patch.x, patch.y, width, height);
  Tensor out({patch.pixels.dim(0), height, width}, 0.0f);
  paste(patch.pixels, patch.x, patch.y, out);
  return out;
}

Tensor random_pad(const MemoryPatch& patch, int width, int height, Rng& rng) {
  check_fits(patch, patch.x, patch.y, width, height);
  Tensor out({patch.pixels.dim(0), height, width});
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (float& v : out.values()) v = normal(rng);
  paste(patch.pixels, patch.x, patch.y, out);
  return out;
}

Tensor random_place(const MemoryPatch& patch, int width, int height, Rng& rng) {
  check_fits(patch, patch.x, patch.y, width, height);
  const int wp = patch.width();
  const int x = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(height - wp + 1)));
  const int y = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(width - wp + 1)));
  Tensor out({patch.pixels.dim(0), height, width}, 0.0f);
  paste(patch.pixels, x, y, out);
  return out;
}

MemoryPatch random_snip(const Example& example, int patch_width, Rng& rng) {
  const Tensor& img = *example.image;
  if (patch_width < 1 || patch_width > img.dim(1) || patch_width > img.dim(2)) {
    throw std::invalid_argument("snip width must fit the image");
  }
  MemoryPatch p;
  p.x = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(img.dim(1) - patch_width + 1)));
  p.y = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(img.dim(2) - patch_width + 1)));
  p.pixels = extract_patch(img, p.x, p.y, patch_width);
  p.task_id = example.task_id;
  p.label = example.label;
  p.head_index = example.head_index;
  p.source_id = example.source_id;
  return p;
}

}  // namespace epr
