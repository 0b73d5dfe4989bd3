#include "epr/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "epr/image_io.hpp"

namespace epr {

double Grid::min() const { return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end()); }
double Grid::max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }

std::vector<double> importance_weights(const TargetCapture& capture) {
  const Tensor& g = capture.gradients;
  if (g.rank() != 3 || !g.same_shape(capture.activations)) {
    throw std::invalid_argument("capture gradients and activations must share an (M, u, v) shape");
  }
  const int m = g.dim(0);
  const std::size_t plane = static_cast<std::size_t>(g.dim(1)) * g.dim(2);
  std::vector<double> alpha(static_cast<std::size_t>(m), 0.0);
  for (int k = 0; k < m; ++k) {
    const float* p = g.data() + static_cast<std::size_t>(k) * plane;
    double s = 0.0;
    for (std::size_t j = 0; j < plane; ++j) s += p[j];
    alpha[static_cast<std::size_t>(k)] = s / static_cast<double>(plane);
  }
  return alpha;
}

Grid localization_map(std::span<const double> weights, const Tensor& activations) {
  if (activations.rank() != 3 || static_cast<int>(weights.size()) != activations.dim(0)) {
    throw std::invalid_argument("need one weight per activation map");
  }
  const int u = activations.dim(1), v = activations.dim(2);
  const std::size_t plane = static_cast<std::size_t>(u) * v;
  Grid out(u, v);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const float* a = activations.data() + k * plane;
    for (std::size_t j = 0; j < plane; ++j) out.values[j] += weights[k] * static_cast<double>(a[j]);
  }
  for (double& x : out.values) x = std::max(0.0, x);
  return out;
}

Grid upsample_bilinear(const Grid& map, int rows, int cols) {
  if (map.rows < 1 || map.cols < 1) throw std::invalid_argument("cannot upsample an empty map");
  if (rows < 1 || cols < 1) throw std::invalid_argument("target size must be positive");
  auto coord = [](int dst, int in, int out, int& lo, int& hi, double& frac) {
    double src = (dst + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    lo = static_cast<int>(std::floor(src));
    hi = std::min(lo + 1, in - 1);
    frac = src - lo;
  };
  Grid out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    int r0, r1;
    double fr;
    coord(r, map.rows, rows, r0, r1, fr);
    for (int c = 0; c < cols; ++c) {
      int c0, c1;
      double fc;
      coord(c, map.cols, cols, c0, c1, fc);
      const double top = (1.0 - fc) * map.at(r0, c0) + fc * map.at(r0, c1);
      const double bottom = (1.0 - fc) * map.at(r1, c0) + fc * map.at(r1, c1);
      out.at(r, c) = (1.0 - fr) * top + fr * bottom;
    }
  }
  return out;
}

SaliencyMap generate_saliency(MultiHeadModel& model, const Tensor& image, int class_index, int task_id) {
  const TargetCapture cap = model.capture_target_layer(image, class_index, task_id);
  const std::vector<double> alpha = importance_weights(cap);
  const Grid coarse = localization_map(alpha, cap.activations);
  return SaliencyMap{upsample_bilinear(coarse, image.dim(1), image.dim(2)), class_index, task_id};
}

void dump_saliency(const SaliencyMap& map, const std::filesystem::path& png_path,
                   const std::filesystem::path& json_path) {
  write_png(png_path, heatmap_rgb(map.values));
  nlohmann::json rec{{"class", map.source_class},
                     {"task", map.source_task},
                     {"min", map.values.min()},
                     {"max", map.values.max()},
                     {"rows", map.values.rows},
                     {"cols", map.values.cols},
                     {"image", png_path.filename().string()}};
  std::ofstream out(json_path);
  if (!out) throw std::runtime_error("cannot write " + json_path.string());
  out << rec.dump(2) << '\n';
}

}  // namespace epr
