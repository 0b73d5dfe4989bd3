#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "epr/rng.hpp"
#include "epr/slot_ratio.hpp"
#include "epr/task_stream.hpp"

namespace epr {

/// How a patch fared when the model classified its zero-padded image.
enum class PredictionTier { correct, top3, other };

const char* to_string(PredictionTier tier);

/// Square crop of a training image kept in episodic memory. `x` is the top
/// row and `y` the left column of the crop inside the source image.
struct MemoryPatch {
  Tensor pixels;  // (C, Wp, Wp)
  int task_id = 0;
  int label = 0;
  int head_index = 0;
  int x = 0;
  int y = 0;
  int source_id = -1;
  PredictionTier tier = PredictionTier::other;

  int width() const { return pixels.rank() == 3 ? pixels.dim(1) : 0; }
};

/// |M_E| = n_sc x classes per task x tasks, rounded half-to-even when the
/// product is fractional.
long memory_capacity(const SlotRatio& n_sc, int classes_per_task, int n_tasks);

/// Per-class FIFO queues. Pushing into a full queue evicts that class's
/// oldest entry. An optional class limit admits only the first N distinct
/// classes ever pushed; later classes are dropped.
class RingBuffer {
 public:
  explicit RingBuffer(int capacity_per_class = 0);

  void push(const Example& example);
  void clear();

  /// Shrinking evicts the oldest entries of every class.
  void set_capacity_per_class(int capacity);
  int capacity_per_class() const noexcept { return capacity_; }
  void set_class_limit(std::optional<int> limit) { class_limit_ = limit; }

  std::size_t size() const noexcept;
  bool empty() const noexcept { return size() == 0; }
  /// Classes in order of first admission.
  const std::vector<int>& classes() const noexcept { return class_order_; }
  const std::deque<Example>& queue(int label) const;
  /// Flattened contents: classes in admission order, each oldest first.
  std::vector<Example> items() const;

 private:
  int capacity_;
  std::optional<int> class_limit_;
  std::vector<int> class_order_;
  std::unordered_map<int, std::deque<Example>> queues_;
};

/// Applies the ER-RING slot policy for `mem_size` total slots once
/// `classes_seen` classes have arrived: floor(mem_size / classes_seen) per
/// class, or one slot for each of the first mem_size classes when that floor
/// is zero.
void apply_er_ring_policy(RingBuffer& buffer, long mem_size, int classes_seen);

/// Fixed-size uniform sample of a stream.
class ReservoirBuffer {
 public:
  explicit ReservoirBuffer(std::size_t capacity = 0) : capacity_(capacity) {}

  void push(const Example& example, Rng& rng);

  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t seen() const noexcept { return seen_; }
  const std::vector<Example>& items() const noexcept { return slots_; }
  std::size_t size() const noexcept { return slots_.size(); }
  bool empty() const noexcept { return slots_.empty(); }

 private:
  std::size_t capacity_;
  std::uint64_t seen_ = 0;
  std::vector<Example> slots_;
};

/// Patch memory with a per-class patch limit (the packing factor).
class EpisodicMemory {
 public:
  explicit EpisodicMemory(int per_class_limit = 0) : per_class_limit_(per_class_limit) {}

  /// Throws std::length_error if the patch's class is already full.
  void add(MemoryPatch patch);

  const std::vector<MemoryPatch>& patches() const noexcept { return patches_; }
  std::size_t size() const noexcept { return patches_.size(); }
  bool empty() const noexcept { return patches_.empty(); }
  int per_class_limit() const noexcept { return per_class_limit_; }
  int count(int task_id, int label) const;
  /// Sum of stored patch areas in pixels (per channel).
  long total_area() const;

 private:
  int per_class_limit_;
  std::vector<MemoryPatch> patches_;
};

/// Indices of a uniform sample of size n: without replacement when
/// population >= n, with replacement otherwise, empty for an empty population.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, Rng& rng);

std::vector<MemoryPatch> sample_replay(const EpisodicMemory& memory, std::size_t n, Rng& rng);
std::vector<Example> sample_replay(const RingBuffer& buffer, std::size_t n, Rng& rng);
std::vector<Example> sample_replay(const ReservoirBuffer& buffer, std::size_t n, Rng& rng);

/// Counts per (task, class) for reporting.
nlohmann::json snapshot_json(const EpisodicMemory& memory);
nlohmann::json snapshot_json(const std::vector<Example>& buffer_items, std::size_t capacity);

}  // namespace epr
