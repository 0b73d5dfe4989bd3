#include "epr/memory.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace epr {

const char* to_string(PredictionTier tier) {
  switch (tier) {
    case PredictionTier::correct:
      return "correct";
    case PredictionTier::top3:
      return "top3";
    case PredictionTier::other:
      return "other";
  }
  return "other";
}

long memory_capacity(const SlotRatio& n_sc, int classes_per_task, int n_tasks) {
  if (!n_sc.positive() || classes_per_task < 1 || n_tasks < 1) {
    throw std::invalid_argument("memory capacity needs positive slots, classes and tasks");
  }
  const std::int64_t num = n_sc.num() * classes_per_task * n_tasks;
  const std::int64_t den = n_sc.den();
  std::int64_t q = num / den;
  const std::int64_t twice_rem = 2 * (num % den);
  if (twice_rem > den || (twice_rem == den && q % 2 == 1)) ++q;
  return static_cast<long>(q);
}

// ---------------------------------------------------------------- RingBuffer

RingBuffer::RingBuffer(int capacity_per_class) : capacity_(capacity_per_class) {
  if (capacity_per_class < 0) throw std::invalid_argument("ring buffer capacity must be non-negative");
}

void RingBuffer::push(const Example& example) {
  if (capacity_ == 0) return;
  auto it = queues_.find(example.label);
  if (it == queues_.end()) {
    if (class_limit_ && static_cast<int>(class_order_.size()) >= *class_limit_) return;
    class_order_.push_back(example.label);
    it = queues_.emplace(example.label, std::deque<Example>{}).first;
  }
  it->second.push_back(example);
  while (static_cast<int>(it->second.size()) > capacity_) it->second.pop_front();
}

void RingBuffer::clear() {
  queues_.clear();
  class_order_.clear();
}

void RingBuffer::set_capacity_per_class(int capacity) {
  if (capacity < 0) throw std::invalid_argument("ring buffer capacity must be non-negative");
  capacity_ = capacity;
  for (auto& [label, q] : queues_) {
    while (static_cast<int>(q.size()) > capacity_) q.pop_front();
  }
}

std::size_t RingBuffer::size() const noexcept {
  std::size_t n = 0;
  for (const auto& [label, q] : queues_) n += q.size();
  return n;
}

const std::deque<Example>& RingBuffer::queue(int label) const {
  static const std::deque<Example> kEmpty;
  auto it = queues_.find(label);
  return it == queues_.end() ? kEmpty : it->second;
}

std::vector<Example> RingBuffer::items() const {
  std::vector<Example> out;
  out.reserve(size());
  for (int label : class_order_) {
    const auto& q = queues_.at(label);
    out.insert(out.end(), q.begin(), q.end());
  }
  return out;
}

void apply_er_ring_policy(RingBuffer& buffer, long mem_size, int classes_seen) {
  if (classes_seen < 1) throw std::invalid_argument("ER-RING policy needs at least one seen class");
  if (mem_size <= 0) {
    buffer.set_capacity_per_class(0);
    return;
  }
  const long per_class = mem_size / classes_seen;
  if (per_class >= 1) {
    buffer.set_class_limit(std::nullopt);
    buffer.set_capacity_per_class(static_cast<int>(per_class));
  } else {
    buffer.set_class_limit(static_cast<int>(mem_size));
    buffer.set_capacity_per_class(1);
  }
}

// ---------------------------------------------------------------- ReservoirBuffer

void ReservoirBuffer::push(const Example& example, Rng& rng) {
  ++seen_;
  if (slots_.size() < capacity_) {
    slots_.push_back(example);
    return;
  }
  if (capacity_ == 0) return;
  const std::uint64_t j = std::uniform_int_distribution<std::uint64_t>(0, seen_ - 1)(rng);
  if (j < capacity_) slots_[static_cast<std::size_t>(j)] = example;
}

// ---------------------------------------------------------------- EpisodicMemory

void EpisodicMemory::add(MemoryPatch patch) {
  if (count(patch.task_id, patch.label) >= per_class_limit_) {
    throw std::length_error("episodic memory already holds " + std::to_string(per_class_limit_) +
                            " patches for class " + std::to_string(patch.label));
  }
  patches_.push_back(std::move(patch));
}

int EpisodicMemory::count(int task_id, int label) const {
  return static_cast<int>(std::count_if(patches_.begin(), patches_.end(), [&](const MemoryPatch& p) {
    return p.task_id == task_id && p.label == label;
  }));
}

long EpisodicMemory::total_area() const {
  long a = 0;
  for (const auto& p : patches_) a += static_cast<long>(p.width()) * p.width();
  return a;
}

// ---------------------------------------------------------------- sampling

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, Rng& rng) {
  std::vector<std::size_t> out;
  if (population == 0 || n == 0) return out;
  out.reserve(n);
  if (population >= n) {
    std::vector<std::size_t> idx(population);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + uniform_index(rng, population - i);
      std::swap(idx[i], idx[j]);
      out.push_back(idx[i]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.push_back(uniform_index(rng, population));
  }
  return out;
}

std::vector<MemoryPatch> sample_replay(const EpisodicMemory& memory, std::size_t n, Rng& rng) {
  std::vector<MemoryPatch> out;
  for (std::size_t i : sample_indices(memory.size(), n, rng)) out.push_back(memory.patches()[i]);
  return out;
}

std::vector<Example> sample_replay(const RingBuffer& buffer, std::size_t n, Rng& rng) {
  const std::vector<Example> items = buffer.items();
  std::vector<Example> out;
  for (std::size_t i : sample_indices(items.size(), n, rng)) out.push_back(items[i]);
  return out;
}

std::vector<Example> sample_replay(const ReservoirBuffer& buffer, std::size_t n, Rng& rng) {
  std::vector<Example> out;
  for (std::size_t i : sample_indices(buffer.size(), n, rng)) out.push_back(buffer.items()[i]);
  return out;
}

// ---------------------------------------------------------------- snapshots

nlohmann::json snapshot_json(const EpisodicMemory& memory) {
  std::map<std::pair<int, int>, int> counts;
  for (const auto& p : memory.patches()) ++counts[{p.task_id, p.label}];
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [key, c] : counts) classes.push_back({{"task", key.first}, {"class", key.second}, {"count", c}});
  return {{"kind", "episodic"},
          {"patches", memory.size()},
          {"per_class_limit", memory.per_class_limit()},
          {"total_area", memory.total_area()},
          {"classes", classes}};
}

nlohmann::json snapshot_json(const std::vector<Example>& buffer_items, std::size_t capacity) {
  std::map<std::pair<int, int>, int> counts;
  for (const auto& e : buffer_items) ++counts[{e.task_id, e.label}];
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [key, c] : counts) classes.push_back({{"task", key.first}, {"class", key.second}, {"count", c}});
  return {{"kind", "examples"}, {"items", buffer_items.size()}, {"capacity", capacity}, {"classes", classes}};
}

}  // namespace epr
