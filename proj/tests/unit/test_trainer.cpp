#include <doctest.h>

#include <cmath>
#include <numeric>

#include "epr/trainer.hpp"
#include "support.hpp"

using namespace epr;

namespace {

// The regime used by the experiment defaults: 4 tasks x 2 classes of
// 32 px glyphs, 250 training images per class.
struct Bench {
  Dataset data;
  TaskStream stream;
};

Bench bench(std::uint64_t seed, int n_tasks = 4, int per_class = 250, int width = 32) {
  SyntheticOptions o;
  o.n_classes = n_tasks * 2;
  o.per_class_train = per_class;
  o.per_class_test = 50;
  o.width = width;
  o.background_noise = 0.5f;
  o.seed = seed + 1;
  Bench b{generate_synthetic_dataset(o), {}};
  b.stream = build_split_stream(b.data, n_tasks, 2, seed);
  return b;
}

ModelConfig model_for(int n_tasks, std::uint64_t seed, int width = 32) {
  ModelConfig mc;
  mc.n_tasks = n_tasks;
  mc.classes_per_task = 2;
  mc.width = width;
  mc.seed = seed;
  return mc;
}

double run_acc(const Bench& b, MethodConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  MultiHeadModel m(model_for(static_cast<int>(b.stream.tasks.size()), seed));
  return acc_metric(train_continual(b.stream.tasks, m, cfg).matrix);
}

MethodConfig method(Method m, SlotRatio n_sc = SlotRatio(1), int epf = 2) {
  MethodConfig c;
  c.method = m;
  c.n_sc = n_sc;
  c.epf = epf;
  return c;
}

}  // namespace

TEST_CASE("method names") {
  for (Method m : {Method::epr, Method::epr_zero_random, Method::epr_randpad_exact, Method::random_snip,
                   Method::er_ring, Method::er_reservoir, Method::finetune, Method::multitask}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_THROWS(parse_method("gem"));
  CHECK(is_patch_method(Method::random_snip));
  CHECK_FALSE(is_patch_method(Method::er_ring));
}

TEST_CASE("finetune is the plain online loop") {
  const Bench b = bench(1, 3, 20, 16);
  MethodConfig cfg = method(Method::finetune);
  cfg.seed = 5;
  MultiHeadModel a(model_for(3, 5, 16));
  MultiHeadModel ref = a;
  const RunResult res = train_continual(b.stream.tasks, a, cfg);

  ResultMatrix expected(3);
  for (const auto& task : b.stream.tasks) {
    for (const auto& batch : iterate_online(task, cfg.batch_size, stream_seed(5, "order"))) ref.sgd_step(batch, cfg.lr);
    expected.add_row(evaluate_tasks(ref, b.stream.tasks));
  }
  CHECK(res.matrix.rows == expected.rows);
  CHECK(res.memory_slots == 0);
  CHECK(res.memory.empty());
  CHECK(res.buffer.empty());
  CHECK(res.current_examples_seen == 3u * 2u * 20u);
}

TEST_CASE("runs complete a full lower-triangular history") {
  const Bench b = bench(2, 17, 4, 16);
  MultiHeadModel m(model_for(17, 2, 16));
  const RunResult res = train_continual(b.stream.tasks, m, method(Method::epr));
  CHECK(res.matrix.complete());
  CHECK(res.matrix.rows.size() == 17);
  CHECK(res.memory.size() == 17u * 2u * 2u);
  CHECK(res.patch_width == patch_width(SlotRatio(1), 2, 16));
  CHECK(res.memory.total_area() <= 17L * 2L * 16L * 16L);
  CHECK(res.memory_updates.size() == 17);
}

TEST_CASE("ER buffers respect their capacity") {
  const Bench b = bench(3, 4, 20, 16);
  for (Method mth : {Method::er_ring, Method::er_reservoir}) {
    for (const char* n_sc : {"1", "0.5"}) {
      MultiHeadModel m(model_for(4, 3, 16));
      const RunResult res = train_continual(b.stream.tasks, m, method(mth, SlotRatio::parse(n_sc)));
      CHECK(res.memory_slots == memory_capacity(SlotRatio::parse(n_sc), 2, 4));
      CHECK(static_cast<long>(res.buffer.size()) <= res.memory_slots);
      CHECK(!res.buffer.empty());
    }
  }
}

TEST_CASE("saliency placement variants share the first memory") {
  const Bench b = bench(4, 2, 20, 16);
  const std::span<const TaskDescriptor> first(b.stream.tasks.data(), 1);
  auto memory_after_first = [&](Method mth) {
    MultiHeadModel m(model_for(2, 4, 16));
    MethodConfig cfg = method(mth);
    cfg.seed = 4;
    return train_continual(first, m, cfg).memory;
  };
  const EpisodicMemory a = memory_after_first(Method::epr);
  const EpisodicMemory c = memory_after_first(Method::epr_zero_random);
  const EpisodicMemory d = memory_after_first(Method::epr_randpad_exact);
  REQUIRE(a.size() == 4);
  for (const EpisodicMemory* other : {&c, &d}) {
    REQUIRE(other->size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(other->patches()[i].pixels == a.patches()[i].pixels);
      CHECK(other->patches()[i].x == a.patches()[i].x);
      CHECK(other->patches()[i].y == a.patches()[i].y);
    }
  }
}

TEST_CASE("a divergent learning rate stops the run") {
  const Bench b = bench(5, 2, 20, 16);
  MultiHeadModel m(model_for(2, 5, 16));
  MethodConfig cfg = method(Method::finetune);
  cfg.lr = 1e6;
  const RunResult res = train_continual(b.stream.tasks, m, cfg);
  CHECK(res.diverged);
  CHECK(!res.error.empty());
  CHECK_FALSE(res.matrix.complete());

  cfg.lr = 0.0;
  CHECK_THROWS(train_continual(b.stream.tasks, m, cfg));
  cfg = method(Method::multitask);
  CHECK_THROWS(train_continual(b.stream.tasks, m, cfg));
}

TEST_CASE("buffer informativeness") {
  const Bench b = bench(6, 2, 100);
  MultiHeadModel m(model_for(2, 6));
  CHECK_THROWS(buffer_informativeness({}, m, b.stream.tasks, 1, 0.1, 1));
  CHECK_THROWS(buffer_informativeness(b.stream.tasks[0].train, m, b.stream.tasks, 0, 0.1, 1));

  MultiHeadModel single(model_for(2, 6));
  const MultitaskResult mt = train_multitask(b.stream.tasks, single, 0.1, 6);
  CHECK(mt.examples_used == 2u * 2u * 100u);
  CHECK(mt.task_accuracy.size() == 2);

  std::vector<Example> all;
  for (const auto& t : b.stream.tasks) all.insert(all.end(), t.train.begin(), t.train.end());
  MultiHeadModel fresh(model_for(2, 6));
  const double probe = buffer_informativeness(all, fresh, b.stream.tasks, 3, 0.1, 6);
  MESSAGE("multitask " << mt.accuracy << ", full-buffer probe " << probe);
  CHECK(probe >= mt.accuracy - 0.05);
}

TEST_CASE("replay set pads patches in place") {
  EpisodicMemory mem(1);
  MemoryPatch p;
  p.pixels = Tensor({3, 4, 4}, 1.0f);
  p.x = 2;
  p.y = 3;
  p.task_id = 1;
  p.label = 6;
  p.head_index = 1;
  mem.add(p);
  const auto set = replay_set(mem, 8);
  REQUIRE(set.size() == 1);
  CHECK(set[0].label == 6);
  CHECK(set[0].head_index == 1);
  CHECK(set[0].image->at(0, 2, 3) == 1.0f);
  CHECK(set[0].image->at(0, 0, 0) == 0.0f);
}

TEST_CASE("method comparisons on the glyph benchmark") {
  // Three seeds each; these are the slowest unit tests.
  std::vector<double> finetune, multitask, er, epr_whole;
  for (std::uint64_t seed : {1, 2, 3}) {
    const Bench b = bench(seed);
    finetune.push_back(run_acc(b, method(Method::finetune), seed));
    er.push_back(run_acc(b, method(Method::er_ring), seed));

    // EPF 1 at n_sc 1 keeps whole images; forcing every tier to 'other'
    // keeps the older of the two staged images of each class.
    MethodConfig whole = method(Method::epr, SlotRatio(1), 1);
    whole.force_tier_other = true;
    epr_whole.push_back(run_acc(b, whole, seed));

    MultiHeadModel m(model_for(4, seed));
    multitask.push_back(train_multitask(b.stream.tasks, m, 0.1, seed).accuracy);
  }
  const MeanStd ft = mean_std(finetune), mt = mean_std(multitask), ring = mean_std(er), whole = mean_std(epr_whole);
  MESSAGE("finetune " << ft.mean << " multitask " << mt.mean << " er-ring " << ring.mean << " epr(EPF=1) "
                      << whole.mean);
  CHECK(mt.mean >= ft.mean);
  // Within noise: three standard errors of the difference, floored at one
  // test image out of a task's 100.
  const double se = std::sqrt(ring.std * ring.std / 3 + whole.std * whole.std / 3);
  CHECK(std::abs(ring.mean - whole.mean) <= 3 * se + 0.01);
}
