#include "epr/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "epr/rng.hpp"

namespace epr {
namespace {

constexpr int kShapeCount = 8;

constexpr std::array<std::array<float, 3>, 8> kPalette{{
    {0.95f, 0.10f, 0.10f},
    {0.10f, 0.85f, 0.15f},
    {0.15f, 0.25f, 0.95f},
    {0.95f, 0.90f, 0.10f},
    {0.90f, 0.15f, 0.90f},
    {0.10f, 0.90f, 0.90f},
    {0.98f, 0.55f, 0.05f},
    {0.98f, 0.98f, 0.98f},
}};

bool shape_pixel(int shape, int r, int c, int side) {
  const int t = std::max(1, side / 8);
  const double mid = (side - 1) / 2.0;
  switch (shape) {
    case 0:  // filled square
      return r >= t && r < side - t && c >= t && c < side - t;
    case 1:  // hollow square
      return r < 2 * t || r >= side - 2 * t || c < 2 * t || c >= side - 2 * t;
    case 2:  // plus
      return std::abs(r - mid) <= t || std::abs(c - mid) <= t;
    case 3:  // diagonal cross
      return std::abs(r - c) <= t || std::abs(r + c - (side - 1)) <= t;
    case 4:  // horizontal bars
      return (r / (2 * t)) % 2 == 0;
    case 5:  // vertical bars
      return (c / (2 * t)) % 2 == 0;
    case 6: {  // disk
      const double dr = r - mid;
      const double dc = c - mid;
      return dr * dr + dc * dc <= (mid + 0.5) * (mid + 0.5);
    }
    case 7:  // triangle
      return c <= r;
  }
  return false;
}

}  // namespace

std::vector<std::uint8_t> glyph_mask(int label, int side) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(side) * side, 0);
  const int shape = label % kShapeCount;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      mask[static_cast<std::size_t>(r) * side + c] = shape_pixel(shape, r, c, side) ? 1 : 0;
    }
  }
  return mask;
}

std::array<float, 3> glyph_color(int label) {
  const int idx = (label + label / kShapeCount) % static_cast<int>(kPalette.size());
  return kPalette[static_cast<std::size_t>(idx)];
}

Dataset generate_synthetic_dataset(const SyntheticOptions& options) {
  if (options.width < 16) throw std::invalid_argument("synthetic image width must be at least 16");
  if (options.n_classes < 2) throw std::invalid_argument("synthetic dataset needs at least 2 classes");
  if (options.n_classes > kShapeCount * static_cast<int>(kPalette.size())) {
    throw std::invalid_argument("synthetic generator supports at most 64 distinct classes");
  }
  if (!(options.background_noise >= 0.0f && options.background_noise <= 1.0f)) {
    throw std::invalid_argument("background noise amplitude must lie in [0, 1]");
  }
  if (options.per_class_train < 0 || options.per_class_test < 0) {
    throw std::invalid_argument("per-class sample counts must be non-negative");
  }

  Dataset ds;
  ds.name = "synthetic";
  ds.channels = 3;
  ds.width = options.width;
  ds.n_classes = options.n_classes;

  const int w = options.width;
  const int side = w / 2;
  Rng rng = make_stream(options.seed, "synthetic");
  std::uniform_real_distribution<float> noise(0.0f, options.background_noise);
  std::uniform_int_distribution<int> pos(0, w - side);

  auto render = [&](int label, LabeledSplit& split) {
    Tensor img({3, w, w});
    for (float& v : img.values()) v = noise(rng);
    const Box box{pos(rng), pos(rng), side, side};
    const auto mask = glyph_mask(label, side);
    const auto color = glyph_color(label);
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        if (!mask[static_cast<std::size_t>(r) * side + c]) continue;
        for (int ch = 0; ch < 3; ++ch) img.at(ch, box.x + r, box.y + c) = color[static_cast<std::size_t>(ch)];
      }
    }
    split.images.push_back(std::make_shared<const Tensor>(std::move(img)));
    split.labels.push_back(label);
    split.boxes.push_back(box);
  };

  // Class-major order keeps the dataset layout independent of split sizes.
  for (int label = 0; label < options.n_classes; ++label) {
    for (int i = 0; i < options.per_class_train; ++i) render(label, ds.train);
    for (int i = 0; i < options.per_class_test; ++i) render(label, ds.test);
  }
  return ds;
}

}  // namespace epr
