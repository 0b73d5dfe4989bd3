#include "epr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace epr {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

std::size_t shape_volume(const Shape& shape) {
  std::size_t v = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension in " + shape_string(shape));
    v *= static_cast<std::size_t>(d);
  }
  return v;
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(std::move(shape)), values_(shape_volume(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_volume(shape_)) {
    throw std::invalid_argument("tensor value count does not match shape " + shape_string(shape_));
  }
}

std::size_t Tensor::item_size() const {
  if (shape_.empty()) return 0;
  return shape_[0] == 0 ? 0 : values_.size() / static_cast<std::size_t>(shape_[0]);
}

std::span<float> Tensor::item(int n) {
  const std::size_t stride = item_size();
  return {values_.data() + static_cast<std::size_t>(n) * stride, stride};
}

std::span<const float> Tensor::item(int n) const {
  const std::size_t stride = item_size();
  return {values_.data() + static_cast<std::size_t>(n) * stride, stride};
}

void Tensor::fill(float v) { std::fill(values_.begin(), values_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_volume(shape) != values_.size()) {
    throw std::invalid_argument("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), values_);
}

double Tensor::sum() const {
  double s = 0.0;
  for (float v : values_) s += v;
  return s;
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

Tensor stack(std::span<const Tensor> images) {
  if (images.empty()) throw std::invalid_argument("cannot stack an empty image list");
  const Shape& first = images.front().shape();
  if (first.size() != 3) throw std::invalid_argument("stack expects rank-3 images");
  Tensor out({static_cast<int>(images.size()), first[0], first[1], first[2]});
  const std::size_t stride = images.front().size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape() != first) {
      throw std::invalid_argument("stack: image " + std::to_string(i) + " has shape " +
                                  shape_string(images[i].shape()) + ", expected " + shape_string(first));
    }
    std::memcpy(out.data() + i * stride, images[i].data(), stride * sizeof(float));
  }
  return out;
}

}  // namespace epr
