#include "epr/task_stream.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "epr/cifar.hpp"
#include "epr/rng.hpp"
#include "epr/synthetic.hpp"

namespace epr {

double intersection_over_union(const Box& a, const Box& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.w, b.x + b.w);
  const int y1 = std::min(a.y + a.h, b.y + b.h);
  const long inter = (x1 > x0 && y1 > y0) ? static_cast<long>(x1 - x0) * (y1 - y0) : 0;
  const long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

int TaskDescriptor::head_index_of(int label) const {
  auto it = std::find(label_set.begin(), label_set.end(), label);
  if (it == label_set.end()) {
    throw std::out_of_range("label " + std::to_string(label) + " is not part of task " +
                            std::to_string(task_id));
  }
  return static_cast<int>(it - label_set.begin());
}

bool TaskDescriptor::owns_label(int label) const {
  return std::find(label_set.begin(), label_set.end(), label) != label_set.end();
}

DatasetSource parse_dataset_source(const std::string& name) {
  if (name == "synthetic") return DatasetSource::synthetic;
  if (name == "cifar-dir" || name == "cifar" || name == "cifar-format-dir" || name == "cifar100") return DatasetSource::cifar_dir;
  throw std::invalid_argument("unknown dataset '" + name + "' (expected synthetic or cifar-dir)");
}

namespace {

std::vector<Example> collect(const LabeledSplit& split, const std::unordered_map<int, int>& head_of,
                             int task_id) {
  std::vector<Example> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    auto it = head_of.find(split.labels[i]);
    if (it == head_of.end()) continue;
    out.push_back(Example{split.images[i], task_id, split.labels[i], it->second, static_cast<int>(i)});
  }
  return out;
}

}  // namespace

TaskStream build_split_stream(const Dataset& dataset, int n_tasks, int classes_per_task,
                              std::uint64_t seed) {
  if (n_tasks < 1 || classes_per_task < 1) {
    throw std::invalid_argument("task count and classes per task must be positive");
  }
  const long needed = static_cast<long>(n_tasks) * classes_per_task;
  if (dataset.n_classes < needed) {
    throw std::invalid_argument("dataset '" + dataset.name + "' has " + std::to_string(dataset.n_classes) +
                                " classes but " + std::to_string(n_tasks) + " tasks x " +
                                std::to_string(classes_per_task) + " classes need " + std::to_string(needed));
  }

  std::vector<int> classes(static_cast<std::size_t>(dataset.n_classes));
  std::iota(classes.begin(), classes.end(), 0);
  if (seed != 0) {
    Rng rng = make_stream(seed, "class-order");
    std::shuffle(classes.begin(), classes.end(), rng);
  }

  TaskStream stream;
  stream.meta = StreamMeta{dataset.width, dataset.width, dataset.channels, classes_per_task, n_tasks};
  for (int t = 0; t < n_tasks; ++t) {
    TaskDescriptor task;
    task.task_id = t + 1;
    std::unordered_map<int, int> head_of;
    for (int j = 0; j < classes_per_task; ++j) {
      const int label = classes[static_cast<std::size_t>(t * classes_per_task + j)];
      task.label_set.push_back(label);
      head_of.emplace(label, j);
    }
    task.train = collect(dataset.train, head_of, task.task_id);
    task.test = collect(dataset.test, head_of, task.task_id);
    stream.tasks.push_back(std::move(task));
  }
  validate_stream(stream);
  return stream;
}

TaskStream build_split_stream(DatasetSource source, const std::filesystem::path& location, int n_tasks,
                              int classes_per_task, std::uint64_t seed) {
  switch (source) {
    case DatasetSource::synthetic: {
      SyntheticOptions opt;
      opt.n_classes = n_tasks * classes_per_task;
      opt.seed = seed + 1;
      return build_split_stream(generate_synthetic_dataset(opt), n_tasks, classes_per_task, seed);
    }
    case DatasetSource::cifar_dir:
      return build_split_stream(load_cifar100_dir(location), n_tasks, classes_per_task, seed);
  }
  throw std::invalid_argument("unsupported dataset source");
}

CrossValidationSplit split_cross_validation(const TaskStream& stream, int k) {
  const int t = static_cast<int>(stream.tasks.size());
  if (k <= 0 || k >= t) {
    throw std::out_of_range("cross-validation task count K=" + std::to_string(k) + " must satisfy 0 < K < " +
                            std::to_string(t));
  }
  CrossValidationSplit split;
  split.cv_tasks.assign(stream.tasks.begin(), stream.tasks.begin() + k);
  split.train_eval_tasks.assign(stream.tasks.begin() + k, stream.tasks.end());
  // Both parts are numbered from 1 so each can drive its own model heads.
  auto renumber = [](std::vector<TaskDescriptor>& tasks) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const int id = static_cast<int>(i) + 1;
      tasks[i].task_id = id;
      for (auto& e : tasks[i].train) e.task_id = id;
      for (auto& e : tasks[i].test) e.task_id = id;
    }
  };
  renumber(split.cv_tasks);
  renumber(split.train_eval_tasks);
  return split;
}

std::vector<std::vector<Example>> iterate_online(const TaskDescriptor& task, int batch_size,
                                                 std::uint64_t seed) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (task.train.empty()) {
    throw std::invalid_argument("task " + std::to_string(task.task_id) + " has no training examples");
  }
  std::vector<std::size_t> order(task.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_stream(seed, "order/task-" + std::to_string(task.task_id));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<Example>> batches;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<Example> batch;
    batch.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i) batch.push_back(task.train[order[i]]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

void validate_stream(const TaskStream& stream) {
  std::set<int> seen;
  const Shape expected{stream.meta.channels, stream.meta.height, stream.meta.width};
  for (const auto& task : stream.tasks) {
    for (int label : task.label_set) {
      if (!seen.insert(label).second) {
        throw std::logic_error("label " + std::to_string(label) + " appears in more than one task");
      }
    }
    for (const auto* split : {&task.train, &task.test}) {
      for (const auto& ex : *split) {
        if (!task.owns_label(ex.label)) {
          throw std::logic_error("example label " + std::to_string(ex.label) + " outside task " +
                                 std::to_string(task.task_id));
        }
        if (!ex.image || ex.image->shape() != expected) {
          throw std::logic_error("example image shape does not match the dataset descriptor " +
                                 shape_string(expected));
        }
      }
    }
  }
}

}  // namespace epr
