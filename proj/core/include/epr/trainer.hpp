#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epr/memory.hpp"
#include "epr/metrics.hpp"
#include "epr/model.hpp"
#include "epr/packing.hpp"

namespace epr {

enum class Method {
  epr,                // zero-pad, exact placement
  epr_zero_random,    // zero-pad, random placement
  epr_randpad_exact,  // gaussian pad, exact placement
  random_snip,        // random windows, zero-pad, exact placement
  er_ring,
  er_reservoir,
  finetune,
  multitask,
};

Method parse_method(const std::string& name);
std::string to_string(Method method);
bool is_patch_method(Method method);

struct MethodConfig {
  Method method = Method::epr;
  double lr = 0.1;
  SlotRatio n_sc{1};
  int epf = 2;
  int stride = 1;
  int batch_size = 10;
  std::uint64_t seed = 0;
  /// Staged images per class for patch methods; 0 selects 2 * epf.
  int staging_per_class = 0;
  /// Skip the prediction-tier ranking (every candidate counts as `other`).
  bool force_tier_other = false;
};

struct RunResult {
  ResultMatrix matrix;
  EpisodicMemory memory;
  /// Final contents of the ER buffers (empty for patch methods).
  std::vector<Example> buffer;
  long memory_slots = 0;
  int patch_width = 0;
  std::vector<double> train_seconds;  // per task, evaluation excluded
  std::vector<double> mean_loss;      // per task
  std::vector<MemoryUpdateReport> memory_updates;
  std::size_t current_examples_seen = 0;
  bool diverged = false;
  std::string error;
};

/// Fraction of examples whose top-scoring head output is the true class.
double evaluate_accuracy(MultiHeadModel& model, std::span<const Example> examples);

/// Accuracy on every task's test set, in task order.
std::vector<double> evaluate_tasks(MultiHeadModel& model, std::span<const TaskDescriptor> tasks);

/// Online continual training over `tasks` in order with the configured
/// replay method, evaluating all tasks after each one. A divergent step
/// stops the run and is reported through `diverged`/`error` with the rows
/// recorded so far.
RunResult train_continual(std::span<const TaskDescriptor> tasks, MultiHeadModel& model, const MethodConfig& cfg);

struct MultitaskResult {
  std::vector<double> task_accuracy;
  double accuracy = 0.0;
  std::size_t examples_used = 0;
  double train_seconds = 0.0;
};

/// Single pass over the shuffled union of all tasks' training data.
MultitaskResult train_multitask(std::span<const TaskDescriptor> tasks, MultiHeadModel& model, double lr,
                                std::uint64_t seed, int batch_size = 10);

/// Full-size training examples for a patch memory (zero-padded, exact
/// placement).
std::vector<Example> replay_set(const EpisodicMemory& memory, int width);

/// Trains `fresh_model` for `epochs` passes over `buffer` and returns the
/// mean test accuracy over `tasks`.
double buffer_informativeness(std::span<const Example> buffer, MultiHeadModel& fresh_model,
                              std::span<const TaskDescriptor> tasks, int epochs, double lr, std::uint64_t seed,
                              int batch_size = 10);

}  // namespace epr
