#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "epr/layers.hpp"
#include "epr/task_stream.hpp"

namespace epr {

enum class Arch { small_cnn, reduced_resnet18 };

Arch parse_arch(const std::string& name);
std::string to_string(Arch arch);

struct ModelConfig {
  Arch arch = Arch::small_cnn;
  int n_tasks = 1;
  int classes_per_task = 2;
  int channels = 3;
  int width = 32;
  /// Stage whose output feeds saliency. Empty selects the last convolutional
  /// block. "<stage>.shortcut" names the input of a residual stage.
  std::string target_layer;
  std::uint64_t seed = 0;
};

/// Raised when a training step produces a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Forward activations and class-score gradients at the target layer for a
/// single image, both shaped (M, u, v).
struct TargetCapture {
  Tensor activations;
  Tensor gradients;
};

/// Convolutional backbone shared by all tasks plus one linear head per task.
/// Task ids are 1-based; head outputs are pre-softmax scores.
class MultiHeadModel {
 public:
  explicit MultiHeadModel(ModelConfig config);
  MultiHeadModel(const MultiHeadModel& other);
  MultiHeadModel& operator=(const MultiHeadModel& other);
  MultiHeadModel(MultiHeadModel&&) noexcept = default;
  MultiHeadModel& operator=(MultiHeadModel&&) noexcept = default;
  ~MultiHeadModel();

  const ModelConfig& config() const noexcept { return config_; }
  int n_tasks() const noexcept { return config_.n_tasks; }
  int classes_per_task() const noexcept { return config_.classes_per_task; }
  const std::string& target_layer() const noexcept { return target_name_; }
  const std::vector<std::string>& stage_names() const noexcept { return stage_names_; }
  /// Declared (M, u, v) shape of the target layer output.
  Shape target_shape() const;
  int feature_dim() const noexcept { return feature_dim_; }

  /// Evaluation-mode scores for a (N, C, W, W) batch routed to one head.
  Tensor forward(const Tensor& images, int task_id);
  /// Scores with a per-example head; row i comes from head task_ids[i].
  Tensor forward(const Tensor& images, std::span<const int> task_ids, bool training);

  /// One plain SGD step on the mean cross-entropy of the joint batch.
  /// Returns the loss before the update.
  double sgd_step(std::span<const Example> batch, double lr);

  /// Target-layer activations and d(score of head_index)/d(activation) for
  /// one (C, W, W) image. Parameters are left untouched.
  TargetCapture capture_target_layer(const Tensor& image, int head_index, int task_id);

  /// Head scores (1, cpt) when the target activation (M, u, v) is injected
  /// in place of the computed one.
  Tensor scores_from_target(const Tensor& activation, int task_id);

  /// Head-local class indices by descending score, ties by ascending index.
  std::vector<int> predict_topk(const Tensor& image, int task_id, int k);

  std::vector<Parameter*> parameters();
  std::vector<Buffer> buffers();
  std::size_t parameter_count();
  Linear& head(int task_id);

  /// Self-describing checkpoint: magic, JSON descriptor (architecture, head
  /// map, tensor table), then little-endian float32 tensor payloads.
  void save(const std::filesystem::path& file);
  static MultiHeadModel load(const std::filesystem::path& file);

 private:
  void build();
  void check_task(int task_id) const;
  Tensor run_backbone(const Tensor& x, bool training, std::size_t stop);
  void zero_grad();

  ModelConfig config_;
  std::string target_name_;
  std::vector<std::string> stage_names_;
  std::vector<std::unique_ptr<Layer>> stages_;
  std::size_t target_index_ = 0;  // captured tensor = output of stages_[target_index_]
  GlobalAvgPool pool_;
  std::vector<Linear> heads_;
  int feature_dim_ = 0;
};

}  // namespace epr
