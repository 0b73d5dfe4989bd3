#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace epr {

using Shape = std::vector<int>;

std::string shape_string(const Shape& shape);

/// Dense row-major float tensor. Images are rank 3 (C, H, W); batches are
/// rank 4 (N, C, H, W). Row index is the first spatial axis everywhere.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  float* data() noexcept { return values_.data(); }
  const float* data() const noexcept { return values_.data(); }
  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }

  float& operator[](std::size_t i) noexcept { return values_[i]; }
  float operator[](std::size_t i) const noexcept { return values_[i]; }

  float& at(int c, int h, int w) noexcept {
    return values_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
  }
  float at(int c, int h, int w) const noexcept {
    return values_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
  }
  float& at(int n, int c, int h, int w) noexcept {
    return values_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  float at(int n, int c, int h, int w) const noexcept {
    return values_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  /// Number of elements in one item along axis 0.
  std::size_t item_size() const;
  std::span<float> item(int n);
  std::span<const float> item(int n) const;

  void fill(float v);
  Tensor reshaped(Shape shape) const;
  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

  double sum() const;
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> values_;
};

std::size_t shape_volume(const Shape& shape);

/// Stacks equally shaped rank-3 images into an (N, C, H, W) batch.
Tensor stack(std::span<const Tensor> images);

}  // namespace epr
