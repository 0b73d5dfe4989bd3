#include "epr/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace epr {
namespace {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using ConstMapRM = Eigen::Map<const MatRM>;

std::string join(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

void init_uniform(Tensor& t, float bound, Rng& rng) {
  std::uniform_real_distribution<float> dist(-bound, bound);
  for (float& v : t.values()) v = dist(rng);
}

void require_rank(const Tensor& x, int rank, const char* who) {
  if (x.rank() != rank) {
    throw std::invalid_argument(std::string(who) + " expects a rank-" + std::to_string(rank) + " input, got " +
                                shape_string(x.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding, bool bias, Rng& rng)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      has_bias_(bias),
      weight_("weight", {out_channels, in_channels * kernel * kernel}),
      bias_("bias", {bias ? out_channels : 0}) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(in_channels * kernel * kernel));
  init_uniform(weight_.value, bound, rng);
  if (has_bias_) init_uniform(bias_.value, bound, rng);
}

Shape Conv2d::output_shape(const Shape& in) const {
  const int h = (in.at(1) + 2 * padding_ - kernel_) / stride_ + 1;
  const int w = (in.at(2) + 2 * padding_ - kernel_) / stride_ + 1;
  return {out_, h, w};
}

namespace {

void im2col(const float* src, int channels, int h, int w, int k, int stride, int pad, int ho, int wo, float* col) {
  const int plane = ho * wo;
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        float* row = col + static_cast<std::size_t>((c * k + ki) * k + kj) * plane;
        for (int oh = 0; oh < ho; ++oh) {
          const int ih = oh * stride - pad + ki;
          float* dst = row + oh * wo;
          if (ih < 0 || ih >= h) {
            std::fill(dst, dst + wo, 0.0f);
            continue;
          }
          const float* line = src + (static_cast<std::size_t>(c) * h + ih) * w;
          for (int ow = 0; ow < wo; ++ow) {
            const int iw = ow * stride - pad + kj;
            dst[ow] = (iw >= 0 && iw < w) ? line[iw] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im(const float* col, int channels, int h, int w, int k, int stride, int pad, int ho, int wo, float* dst) {
  const int plane = ho * wo;
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const float* row = col + static_cast<std::size_t>((c * k + ki) * k + kj) * plane;
        for (int oh = 0; oh < ho; ++oh) {
          const int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= h) continue;
          float* line = dst + (static_cast<std::size_t>(c) * h + ih) * w;
          const float* src = row + oh * wo;
          for (int ow = 0; ow < wo; ++ow) {
            const int iw = ow * stride - pad + kj;
            if (iw >= 0 && iw < w) line[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor Conv2d::forward(const Tensor& x, bool /*training*/) {
  require_rank(x, 4, "Conv2d");
  if (x.dim(1) != in_) {
    throw std::invalid_argument("Conv2d expects " + std::to_string(in_) + " channels, got " +
                                shape_string(x.shape()));
  }
  const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const Shape os = output_shape({in_, h, w});
  const int ho = os[1], wo = os[2];
  input_ = x;

  Tensor out({n, out_, ho, wo});
  const int rows = in_ * kernel_ * kernel_;
  MatRM col(rows, ho * wo);
  ConstMapRM wmat(weight_.value.data(), out_, rows);
  for (int i = 0; i < n; ++i) {
    im2col(x.item(i).data(), in_, h, w, kernel_, stride_, padding_, ho, wo, col.data());
    MapRM o(out.item(i).data(), out_, ho * wo);
    o.noalias() = wmat * col;
    if (has_bias_) {
      for (int c = 0; c < out_; ++c) o.row(c).array() += bias_.value[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const int n = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
  const int ho = grad_out.dim(2), wo = grad_out.dim(3);
  const int rows = in_ * kernel_ * kernel_;
  Tensor grad_in(input_.shape());
  MatRM col(rows, ho * wo);
  MatRM dcol(rows, ho * wo);
  ConstMapRM wmat(weight_.value.data(), out_, rows);
  MapRM dw(weight_.grad.data(), out_, rows);
  for (int i = 0; i < n; ++i) {
    ConstMapRM g(grad_out.item(i).data(), out_, ho * wo);
    im2col(input_.item(i).data(), in_, h, w, kernel_, stride_, padding_, ho, wo, col.data());
    dw.noalias() += g * col.transpose();
    if (has_bias_) {
      for (int c = 0; c < out_; ++c) bias_.grad[static_cast<std::size_t>(c)] += g.row(c).sum();
    }
    dcol.noalias() = wmat.transpose() * g;
    col2im(dcol.data(), in_, h, w, kernel_, stride_, padding_, ho, wo, grad_in.item(i).data());
  }
  return grad_in;
}

void Conv2d::collect_parameters(const std::string& prefix, std::vector<Parameter*>& out) {
  weight_.name = join(prefix, "weight");
  out.push_back(&weight_);
  if (has_bias_) {
    bias_.name = join(prefix, "bias");
    out.push_back(&bias_);
  }
}

// ---------------------------------------------------------------- BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, float momentum, float eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_("weight", {channels}),
      beta_("bias", {channels}),
      running_mean_({channels}, 0.0f),
      running_var_({channels}, 1.0f) {
  gamma_.value.fill(1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  require_rank(x, 4, "BatchNorm2d");
  if (x.dim(1) != channels_) throw std::invalid_argument("BatchNorm2d channel mismatch");
  const int n = x.dim(0), plane = x.dim(2) * x.dim(3);
  const std::size_t count = static_cast<std::size_t>(n) * plane;
  Tensor out(x.shape());
  x_hat_ = Tensor(x.shape());
  inv_std_.assign(static_cast<std::size_t>(channels_), 0.0f);
  trained_pass_ = training;

  for (int c = 0; c < channels_; ++c) {
    double mean = 0.0, var = 0.0;
    if (training) {
      for (int i = 0; i < n; ++i) {
        const float* p = x.data() + (static_cast<std::size_t>(i) * channels_ + c) * plane;
        for (int j = 0; j < plane; ++j) mean += p[j];
      }
      mean /= static_cast<double>(count);
      for (int i = 0; i < n; ++i) {
        const float* p = x.data() + (static_cast<std::size_t>(i) * channels_ + c) * plane;
        for (int j = 0; j < plane; ++j) var += (p[j] - mean) * (p[j] - mean);
      }
      var /= static_cast<double>(count);
      const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
      float& rm = running_mean_[static_cast<std::size_t>(c)];
      float& rv = running_var_[static_cast<std::size_t>(c)];
      rm = static_cast<float>((1.0 - momentum_) * rm + momentum_ * mean);
      rv = static_cast<float>((1.0 - momentum_) * rv + momentum_ * unbiased);
    } else {
      mean = running_mean_[static_cast<std::size_t>(c)];
      var = running_var_[static_cast<std::size_t>(c)];
    }
    const float inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
    inv_std_[static_cast<std::size_t>(c)] = inv;
    const float g = gamma_.value[static_cast<std::size_t>(c)];
    const float b = beta_.value[static_cast<std::size_t>(c)];
    const float m = static_cast<float>(mean);
    for (int i = 0; i < n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * channels_ + c) * plane;
      for (int j = 0; j < plane; ++j) {
        const float xh = (x[off + j] - m) * inv;
        x_hat_[off + j] = xh;
        out[off + j] = g * xh + b;
      }
    }
  }
  return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  const int n = grad_out.dim(0), plane = grad_out.dim(2) * grad_out.dim(3);
  const double count = static_cast<double>(n) * plane;
  Tensor grad_in(grad_out.shape());
  for (int c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * channels_ + c) * plane;
      for (int j = 0; j < plane; ++j) {
        sum_dy += grad_out[off + j];
        sum_dy_xh += static_cast<double>(grad_out[off + j]) * x_hat_[off + j];
      }
    }
    gamma_.grad[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy_xh);
    beta_.grad[static_cast<std::size_t>(c)] += static_cast<float>(sum_dy);
    const float scale = gamma_.value[static_cast<std::size_t>(c)] * inv_std_[static_cast<std::size_t>(c)];
    const float mean_dy = static_cast<float>(sum_dy / count);
    const float mean_dy_xh = static_cast<float>(sum_dy_xh / count);
    for (int i = 0; i < n; ++i) {
      const std::size_t off = (static_cast<std::size_t>(i) * channels_ + c) * plane;
      for (int j = 0; j < plane; ++j) {
        grad_in[off + j] = trained_pass_
                               ? scale * (grad_out[off + j] - mean_dy - x_hat_[off + j] * mean_dy_xh)
                               : scale * grad_out[off + j];
      }
    }
  }
  return grad_in;
}

void BatchNorm2d::collect_parameters(const std::string& prefix, std::vector<Parameter*>& out) {
  gamma_.name = join(prefix, "weight");
  beta_.name = join(prefix, "bias");
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm2d::collect_buffers(const std::string& prefix, std::vector<Buffer>& out) {
  out.push_back({join(prefix, "running_mean"), &running_mean_});
  out.push_back({join(prefix, "running_var"), &running_var_});
}

// ---------------------------------------------------------------- ReLU

Tensor ReLU::forward(const Tensor& x, bool /*training*/) {
  output_ = x;
  for (float& v : output_.values()) v = v > 0.0f ? v : 0.0f;
  return output_;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(output_[i] > 0.0f)) g[i] = 0.0f;
  }
  return g;
}

// ---------------------------------------------------------------- MaxPool2d

Shape MaxPool2d::output_shape(const Shape& in) const { return {in.at(0), in.at(1) / size_, in.at(2) / size_}; }

Tensor MaxPool2d::forward(const Tensor& x, bool /*training*/) {
  require_rank(x, 4, "MaxPool2d");
  input_shape_ = x.shape();
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = h / size_, wo = w / size_;
  Tensor out({n, c, ho, wo});
  argmax_.assign(out.size(), 0);
  std::size_t o = 0;
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t base = (static_cast<std::size_t>(i) * c + ch) * h * w;
      for (int oh = 0; oh < ho; ++oh) {
        for (int ow = 0; ow < wo; ++ow, ++o) {
          float best = -std::numeric_limits<float>::infinity();
          std::size_t best_idx = base;
          for (int a = 0; a < size_; ++a) {
            for (int b = 0; b < size_; ++b) {
              const std::size_t idx = base + static_cast<std::size_t>(oh * size_ + a) * w + (ow * size_ + b);
              if (x[idx] > best) {
                best = x[idx];
                best_idx = idx;
              }
            }
          }
          out[o] = best;
          argmax_[o] = best_idx;
        }
      }
    }
  }
  return out;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
  Tensor grad_in(input_shape_);
  for (std::size_t o = 0; o < grad_out.size(); ++o) grad_in[argmax_[o]] += grad_out[o];
  return grad_in;
}

// ---------------------------------------------------------------- GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x, bool /*training*/) {
  require_rank(x, 4, "GlobalAvgPool");
  input_shape_ = x.shape();
  const int n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  Tensor out({n, c});
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const float* p = x.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
      double s = 0.0;
      for (int j = 0; j < plane; ++j) s += p[j];
      out[static_cast<std::size_t>(i) * c + ch] = static_cast<float>(s / plane);
    }
  }
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  Tensor grad_in(input_shape_);
  const int n = input_shape_[0], c = input_shape_[1], plane = input_shape_[2] * input_shape_[3];
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const float g = grad_out[static_cast<std::size_t>(i) * c + ch] / static_cast<float>(plane);
      float* p = grad_in.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
      std::fill(p, p + plane, g);
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features, Rng& rng)
    : in_(in_features), out_(out_features), weight_("weight", {out_features, in_features}), bias_("bias", {out_features}) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(in_features));
  init_uniform(weight_.value, bound, rng);
  init_uniform(bias_.value, bound, rng);
}

Tensor Linear::forward(const Tensor& x, bool /*training*/) {
  require_rank(x, 2, "Linear");
  if (x.dim(1) != in_) throw std::invalid_argument("Linear input width mismatch: " + shape_string(x.shape()));
  input_ = x;
  const int n = x.dim(0);
  Tensor out({n, out_});
  ConstMapRM xm(x.data(), n, in_);
  ConstMapRM wm(weight_.value.data(), out_, in_);
  MapRM om(out.data(), n, out_);
  om.noalias() = xm * wm.transpose();
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < out_; ++o) om(i, o) += bias_.value[static_cast<std::size_t>(o)];
  }
  return out;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const int n = input_.dim(0);
  ConstMapRM g(grad_out.data(), n, out_);
  ConstMapRM xm(input_.data(), n, in_);
  ConstMapRM wm(weight_.value.data(), out_, in_);
  MapRM dw(weight_.grad.data(), out_, in_);
  dw.noalias() += g.transpose() * xm;
  for (int o = 0; o < out_; ++o) bias_.grad[static_cast<std::size_t>(o)] += g.col(o).sum();
  Tensor grad_in({n, in_});
  MapRM gi(grad_in.data(), n, in_);
  gi.noalias() = g * wm;
  return grad_in;
}

void Linear::collect_parameters(const std::string& prefix, std::vector<Parameter*>& out) {
  weight_.name = join(prefix, "weight");
  bias_.name = join(prefix, "bias");
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// ---------------------------------------------------------------- Sequential

Sequential::Sequential(const Sequential& other) : Layer(other), names_(other.names_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

void Sequential::add(std::string name, std::unique_ptr<Layer> layer) {
  names_.push_back(std::move(name));
  layers_.push_back(std::move(layer));
}

Tensor Sequential::forward(const Tensor& x, bool training) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h, training);
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

Shape Sequential::output_shape(const Shape& in) const {
  Shape s = in;
  for (const auto& l : layers_) s = l->output_shape(s);
  return s;
}

void Sequential::collect_parameters(const std::string& prefix, std::vector<Parameter*>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->collect_parameters(join(prefix, names_[i]), out);
}

void Sequential::collect_buffers(const std::string& prefix, std::vector<Buffer>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->collect_buffers(join(prefix, names_[i]), out);
}

// ---------------------------------------------------------------- BasicBlock

BasicBlock::BasicBlock(int in_planes, int planes, int stride, Rng& rng) {
  main_.add("conv1", std::make_unique<Conv2d>(in_planes, planes, 3, stride, 1, false, rng));
  main_.add("bn1", std::make_unique<BatchNorm2d>(planes));
  main_.add("relu", std::make_unique<ReLU>());
  main_.add("conv2", std::make_unique<Conv2d>(planes, planes, 3, 1, 1, false, rng));
  main_.add("bn2", std::make_unique<BatchNorm2d>(planes));
  if (stride != 1 || in_planes != planes) {
    shortcut_ = std::make_unique<Sequential>();
    shortcut_->add("0", std::make_unique<Conv2d>(in_planes, planes, 1, stride, 0, false, rng));
    shortcut_->add("1", std::make_unique<BatchNorm2d>(planes));
  }
}

BasicBlock::BasicBlock(const BasicBlock& other)
    : Layer(other),
      main_(other.main_),
      shortcut_(other.shortcut_ ? std::make_unique<Sequential>(*other.shortcut_) : nullptr),
      out_relu_(other.out_relu_) {}

Tensor BasicBlock::forward(const Tensor& x, bool training) {
  Tensor m = main_.forward(x, training);
  const Tensor s = shortcut_ ? shortcut_->forward(x, training) : x;
  if (!m.same_shape(s)) throw std::logic_error("residual branch shape mismatch");
  for (std::size_t i = 0; i < m.size(); ++i) m[i] += s[i];
  return out_relu_.forward(m, training);
}

Tensor BasicBlock::backward(const Tensor& grad_out) {
  const Tensor g = out_relu_.backward(grad_out);
  Tensor gx = main_.backward(g);
  const Tensor gs = shortcut_ ? shortcut_->backward(g) : g;
  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gs[i];
  return gx;
}

Shape BasicBlock::output_shape(const Shape& in) const { return main_.output_shape(in); }

void BasicBlock::collect_parameters(const std::string& prefix, std::vector<Parameter*>& out) {
  main_.collect_parameters(prefix, out);
  if (shortcut_) shortcut_->collect_parameters(join(prefix, "shortcut"), out);
}

void BasicBlock::collect_buffers(const std::string& prefix, std::vector<Buffer>& out) {
  main_.collect_buffers(prefix, out);
  if (shortcut_) shortcut_->collect_buffers(join(prefix, "shortcut"), out);
}

}  // namespace epr
