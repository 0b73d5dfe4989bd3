#pragma once

#include <memory>
#include <string>
#include <vector>

#include "epr/rng.hpp"
#include "epr/tensor.hpp"

namespace epr {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(std::move(shape)) {}
};

/// Non-trainable state that is still part of a checkpoint (batch-norm
/// running statistics).
struct Buffer {
  std::string name;
  Tensor* value = nullptr;
};

/// A differentiable layer. `forward` caches what `backward` needs; the
/// gradient accumulates into the layer's parameters. Layers act on batches
/// laid out (N, C, H, W) or (N, F).
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x, bool training) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;

  /// Per-item output shape for a per-item input shape.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;

  virtual void collect_parameters(const std::string& /*prefix*/, std::vector<Parameter*>& /*out*/) {}
  virtual void collect_buffers(const std::string& /*prefix*/, std::vector<Buffer>& /*out*/) {}
};

class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, bool bias, Rng& rng);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }
  void collect_parameters(const std::string& prefix, std::vector<Parameter*>& out) override;

  Parameter& weight() { return weight_; }

 private:
  int in_ = 0, out_ = 0, kernel_ = 0, stride_ = 1, padding_ = 0;
  bool has_bias_ = false;
  Parameter weight_;  // (out, in * k * k)
  Parameter bias_;    // (out)
  Tensor input_;
};

class BatchNorm2d final : public Layer {
 public:
  explicit BatchNorm2d(int channels, float momentum = 0.1f, float eps = 1e-5f);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm2d>(*this); }
  void collect_parameters(const std::string& prefix, std::vector<Parameter*>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<Buffer>& out) override;

 private:
  int channels_;
  float momentum_, eps_;
  Parameter gamma_, beta_;
  Tensor running_mean_, running_var_;
  // cache
  bool trained_pass_ = false;
  Tensor x_hat_;
  std::vector<float> inv_std_;
};

class ReLU final : public Layer {
 public:
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return in; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }

 private:
  Tensor output_;
};

class MaxPool2d final : public Layer {
 public:
  explicit MaxPool2d(int size) : size_(size) {}

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2d>(*this); }

 private:
  int size_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

/// (N, C, H, W) -> (N, C) spatial mean.
class GlobalAvgPool final : public Layer {
 public:
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override { return {in.at(0)}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalAvgPool>(*this); }

 private:
  Shape input_shape_;
};

/// (N, in) -> (N, out).
class Linear final : public Layer {
 public:
  Linear(int in_features, int out_features, Rng& rng);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape&) const override { return {out_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }
  void collect_parameters(const std::string& prefix, std::vector<Parameter*>& out) override;

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  int in_, out_;
  Parameter weight_;  // (out, in)
  Parameter bias_;    // (out)
  Tensor input_;
};

class Sequential final : public Layer {
 public:
  Sequential() = default;
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential&) = delete;

  void add(std::string name, std::unique_ptr<Layer> layer);

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Sequential>(*this); }
  void collect_parameters(const std::string& prefix, std::vector<Parameter*>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<Buffer>& out) override;

 private:
  std::vector<std::string> names_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Residual block: relu(bn2(conv2(relu(bn1(conv1(x))))) + shortcut(x)), the
/// shortcut being a strided 1x1 conv + bn when the shape changes.
class BasicBlock final : public Layer {
 public:
  BasicBlock(int in_planes, int planes, int stride, Rng& rng);
  BasicBlock(const BasicBlock& other);
  BasicBlock& operator=(const BasicBlock&) = delete;

  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  Shape output_shape(const Shape& in) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BasicBlock>(*this); }
  void collect_parameters(const std::string& prefix, std::vector<Parameter*>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<Buffer>& out) override;

 private:
  Sequential main_;
  std::unique_ptr<Sequential> shortcut_;
  ReLU out_relu_;
};

}  // namespace epr
