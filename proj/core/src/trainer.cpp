#include "epr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>

#include "epr/padding.hpp"

namespace epr {

Method parse_method(const std::string& name) {
  if (name == "epr") return Method::epr;
  if (name == "epr-zero-random") return Method::epr_zero_random;
  if (name == "epr-randpad-exact") return Method::epr_randpad_exact;
  if (name == "random-snip") return Method::random_snip;
  if (name == "er-ring") return Method::er_ring;
  if (name == "er-reservoir") return Method::er_reservoir;
  if (name == "finetune") return Method::finetune;
  if (name == "multitask") return Method::multitask;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::epr:
      return "epr";
    case Method::epr_zero_random:
      return "epr-zero-random";
    case Method::epr_randpad_exact:
      return "epr-randpad-exact";
    case Method::random_snip:
      return "random-snip";
    case Method::er_ring:
      return "er-ring";
    case Method::er_reservoir:
      return "er-reservoir";
    case Method::finetune:
      return "finetune";
    case Method::multitask:
      return "multitask";
  }
  return "unknown";
}

bool is_patch_method(Method method) {
  return method == Method::epr || method == Method::epr_zero_random || method == Method::epr_randpad_exact ||
         method == Method::random_snip;
}

double evaluate_accuracy(MultiHeadModel& model, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  constexpr std::size_t kChunk = 128;
  std::size_t correct = 0;
  std::vector<Tensor> images;
  std::vector<int> task_ids;
  for (std::size_t start = 0; start < examples.size(); start += kChunk) {
    const std::size_t stop = std::min(examples.size(), start + kChunk);
    images.clear();
    task_ids.clear();
    for (std::size_t i = start; i < stop; ++i) {
      images.push_back(*examples[i].image);
      task_ids.push_back(examples[i].task_id);
    }
    const Tensor scores = model.forward(stack(images), task_ids, false);
    const int cpt = scores.dim(1);
    for (std::size_t i = start; i < stop; ++i) {
      const auto row = scores.item(static_cast<int>(i - start));
      const int pred = static_cast<int>(std::max_element(row.begin(), row.begin() + cpt) - row.begin());
      if (pred == examples[i].head_index) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::vector<double> evaluate_tasks(MultiHeadModel& model, std::span<const TaskDescriptor> tasks) {
  std::vector<double> acc;
  acc.reserve(tasks.size());
  for (const auto& t : tasks) acc.push_back(evaluate_accuracy(model, t.test));
  return acc;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_inputs(std::span<const TaskDescriptor> tasks, const MultiHeadModel& model) {
  if (tasks.empty()) throw std::invalid_argument("training needs at least one task");
  const ModelConfig& mc = model.config();
  const Shape expected{mc.channels, mc.width, mc.width};
  for (const auto& t : tasks) {
    if (t.train.empty()) throw std::invalid_argument("task " + std::to_string(t.task_id) + " has no training data");
    if (t.train.front().image->shape() != expected) {
      throw std::invalid_argument("task images " + shape_string(t.train.front().image->shape()) +
                                  " do not match model input " + shape_string(expected));
    }
    if (static_cast<int>(t.label_set.size()) != mc.classes_per_task) {
      throw std::invalid_argument("task label set size differs from the model head width");
    }
  }
}

Example as_example(const MemoryPatch& p, Tensor image) {
  return Example{std::make_shared<const Tensor>(std::move(image)), p.task_id, p.label, p.head_index, p.source_id};
}

}  // namespace

RunResult train_continual(std::span<const TaskDescriptor> tasks, MultiHeadModel& model, const MethodConfig& cfg) {
  if (cfg.method == Method::multitask) throw std::invalid_argument("multitask runs through train_multitask");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  check_inputs(tasks, model);

  const int n_tasks = static_cast<int>(tasks.size());
  const int cpt = model.classes_per_task();
  const int width = model.config().width;
  const bool patches = is_patch_method(cfg.method);

  RunResult res;
  res.matrix = ResultMatrix(n_tasks);
  res.matrix.seed = cfg.seed;
  res.matrix.method = to_string(cfg.method);
  res.memory_slots = cfg.method == Method::finetune ? 0 : memory_capacity(cfg.n_sc, cpt, n_tasks);

  PackingConfig pack;
  pack.n_sc = cfg.n_sc;
  pack.epf = cfg.epf;
  pack.stride = cfg.stride;
  pack.width = width;
  pack.staging_per_class = cfg.staging_per_class;
  pack.prioritize_predictions = !cfg.force_tier_other && cfg.method != Method::random_snip;
  pack.locator = cfg.method == Method::random_snip ? PatchLocator::random : PatchLocator::saliency;
  if (patches) res.patch_width = pack.patch_width();

  EpisodicMemory memory(patches ? cfg.epf : 0);
  RingBuffer staging(patches ? pack.staging_capacity() : 0);
  RingBuffer ring(0);
  ReservoirBuffer reservoir(cfg.method == Method::er_reservoir ? static_cast<std::size_t>(res.memory_slots) : 0);

  Rng replay_rng = make_stream(cfg.seed, "replay");
  Rng place_rng = make_stream(cfg.seed, "placement");
  Rng reservoir_rng = make_stream(cfg.seed, "reservoir");
  Rng snip_rng = make_stream(cfg.seed, "snip");
  const std::uint64_t order_seed = stream_seed(cfg.seed, "order");
  const auto n_replay = static_cast<std::size_t>(cfg.batch_size);
  // Exact pixel budget n_sc * classes_seen * W^2, as a rational.
  auto check_budget = [&](int classes_seen) {
    if (cfg.method == Method::er_ring && static_cast<long>(ring.size()) > res.memory_slots) {
      throw std::logic_error("ER-RING buffer exceeded its capacity");
    }
    if (reservoir.size() > reservoir.capacity()) throw std::logic_error("reservoir exceeded its capacity");
    if (patches) {
      const __int128 used = static_cast<__int128>(memory.total_area()) * cfg.n_sc.den();
      const __int128 budget = static_cast<__int128>(cfg.n_sc.num()) * classes_seen * width * width;
      if (used > budget) throw std::logic_error("episodic memory exceeded its pixel budget");
    }
  };

  for (int l = 0; l < n_tasks; ++l) {
    const TaskDescriptor& task = tasks[static_cast<std::size_t>(l)];
    if (cfg.method == Method::er_ring) apply_er_ring_policy(ring, res.memory_slots, (l + 1) * cpt);
    const auto start = Clock::now();
    double loss_sum = 0.0;
    std::size_t steps = 0;
    try {
      for (const auto& batch : iterate_online(task, cfg.batch_size, order_seed)) {
        std::vector<Example> joint = batch;
        if (patches && !memory.empty()) {
          for (const MemoryPatch& p : sample_replay(memory, n_replay, replay_rng)) {
            switch (cfg.method) {
              case Method::epr_zero_random:
                joint.push_back(as_example(p, random_place(p, width, width, place_rng)));
                break;
              case Method::epr_randpad_exact:
                joint.push_back(as_example(p, random_pad(p, width, width, place_rng)));
                break;
              default:
                joint.push_back(as_example(p, zero_pad(p, width, width)));
            }
          }
        } else if (cfg.method == Method::er_ring) {
          for (auto& e : sample_replay(ring, n_replay, replay_rng)) joint.push_back(std::move(e));
        } else if (cfg.method == Method::er_reservoir) {
          for (auto& e : sample_replay(reservoir, n_replay, replay_rng)) joint.push_back(std::move(e));
        }

        loss_sum += model.sgd_step(joint, cfg.lr);
        ++steps;
        res.current_examples_seen += batch.size();

        for (const Example& e : batch) {
          if (patches) {
            staging.push(e);
          } else if (cfg.method == Method::er_ring) {
            ring.push(e);
          } else if (cfg.method == Method::er_reservoir) {
            reservoir.push(e, reservoir_rng);
          }
        }
        check_budget(l * cpt);
      }
      if (patches) {
        res.memory_updates.push_back(update_memory(memory, staging, model, pack, &snip_rng));
        staging.clear();
        check_budget((l + 1) * cpt);
      }
    } catch (const DivergenceError& e) {
      res.diverged = true;
      res.error = "task " + std::to_string(task.task_id) + ": " + e.what();
      res.train_seconds.push_back(seconds_since(start));
      res.mean_loss.push_back(steps ? loss_sum / static_cast<double>(steps) : 0.0);
      break;
    }
    res.train_seconds.push_back(seconds_since(start));
    res.mean_loss.push_back(steps ? loss_sum / static_cast<double>(steps) : 0.0);
    res.matrix.add_row(evaluate_tasks(model, tasks));
  }

  res.memory = std::move(memory);
  if (cfg.method == Method::er_ring) res.buffer = ring.items();
  if (cfg.method == Method::er_reservoir) res.buffer = reservoir.items();
  return res;
}

MultitaskResult train_multitask(std::span<const TaskDescriptor> tasks, MultiHeadModel& model, double lr,
                                std::uint64_t seed, int batch_size) {
  check_inputs(tasks, model);
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  std::vector<Example> all;
  for (const auto& t : tasks) all.insert(all.end(), t.train.begin(), t.train.end());
  Rng rng = make_stream(seed, "multitask-order");
  std::shuffle(all.begin(), all.end(), rng);

  MultitaskResult res;
  const auto start = Clock::now();
  for (std::size_t s = 0; s < all.size(); s += static_cast<std::size_t>(batch_size)) {
    const std::size_t e = std::min(all.size(), s + static_cast<std::size_t>(batch_size));
    model.sgd_step(std::span<const Example>(all).subspan(s, e - s), lr);
    res.examples_used += e - s;
  }
  res.train_seconds = seconds_since(start);
  res.task_accuracy = evaluate_tasks(model, tasks);
  res.accuracy = std::accumulate(res.task_accuracy.begin(), res.task_accuracy.end(), 0.0) /
                 static_cast<double>(res.task_accuracy.size());
  return res;
}

std::vector<Example> replay_set(const EpisodicMemory& memory, int width) {
  std::vector<Example> out;
  out.reserve(memory.size());
  for (const auto& p : memory.patches()) out.push_back(as_example(p, zero_pad(p, width, width)));
  return out;
}

double buffer_informativeness(std::span<const Example> buffer, MultiHeadModel& fresh_model,
                              std::span<const TaskDescriptor> tasks, int epochs, double lr, std::uint64_t seed,
                              int batch_size) {
  if (buffer.empty()) throw std::invalid_argument("buffer informativeness needs a non-empty buffer");
  if (epochs < 1) throw std::invalid_argument("need at least one epoch");
  std::vector<Example> data(buffer.begin(), buffer.end());
  Rng rng = make_stream(seed, "informativeness");
  for (int ep = 0; ep < epochs; ++ep) {
    std::shuffle(data.begin(), data.end(), rng);
    for (std::size_t s = 0; s < data.size(); s += static_cast<std::size_t>(batch_size)) {
      const std::size_t e = std::min(data.size(), s + static_cast<std::size_t>(batch_size));
      fresh_model.sgd_step(std::span<const Example>(data).subspan(s, e - s), lr);
    }
  }
  const std::vector<double> acc = evaluate_tasks(fresh_model, tasks);
  return std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
}

}  // namespace epr
