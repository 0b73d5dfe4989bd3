#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "epr/dataset.hpp"

namespace epr {

/// One training or test item routed to a task head.
struct Example {
  ImagePtr image;
  int task_id = 0;      // 1-based
  int label = 0;        // global class id
  int head_index = 0;   // position of `label` inside the task's label set
  int source_id = -1;   // index into the originating dataset split
};

struct TaskDescriptor {
  int task_id = 0;
  std::vector<int> label_set;
  std::vector<Example> train;
  std::vector<Example> test;

  /// Head output index for a global label; throws if the label is foreign.
  int head_index_of(int label) const;
  bool owns_label(int label) const;
};

struct StreamMeta {
  int width = 0;
  int height = 0;
  int channels = 0;
  int classes_per_task = 0;
  int n_tasks = 0;
};

struct TaskStream {
  std::vector<TaskDescriptor> tasks;
  int cv_tasks = 0;
  StreamMeta meta;
};

enum class DatasetSource { synthetic, cifar_dir };

DatasetSource parse_dataset_source(const std::string& name);

/// Splits a labelled dataset into `n_tasks` disjoint tasks of
/// `classes_per_task` classes each. Global class ids are shuffled with the
/// seed and then chunked contiguously. Seed 0 keeps the natural class order.
TaskStream build_split_stream(const Dataset& dataset, int n_tasks, int classes_per_task,
                              std::uint64_t seed);

/// Convenience front end: builds the dataset first. For `synthetic` the
/// class count is n_tasks * classes_per_task with the default generator
/// sizes; `cifar_dir` reads a CIFAR-100 binary directory.
TaskStream build_split_stream(DatasetSource source, const std::filesystem::path& location,
                              int n_tasks, int classes_per_task, std::uint64_t seed);

struct CrossValidationSplit {
  std::vector<TaskDescriptor> cv_tasks;
  std::vector<TaskDescriptor> train_eval_tasks;
};

/// First K tasks for hyperparameter search, the remaining T-K for training
/// and evaluation. Each part is renumbered from task id 1. Requires 0 < K < T.
CrossValidationSplit split_cross_validation(const TaskStream& stream, int k);

/// One pass over the task's training set in a seed-determined order.
std::vector<std::vector<Example>> iterate_online(const TaskDescriptor& task, int batch_size,
                                                 std::uint64_t seed);

/// Checks the split-protocol invariants; throws std::logic_error on violation.
void validate_stream(const TaskStream& stream);

}  // namespace epr
