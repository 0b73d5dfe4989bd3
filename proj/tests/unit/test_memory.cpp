#include <doctest.h>

#include <cmath>
#include <set>

#include "epr/memory.hpp"
#include "support.hpp"

using namespace epr;

namespace {

Example item(int label, int id) {
  static const auto img = std::make_shared<const Tensor>(Shape{1, 2, 2});
  return Example{img, 1, label, 0, id};
}

std::vector<int> ids(const std::deque<Example>& q) {
  std::vector<int> out;
  for (const auto& e : q) out.push_back(e.source_id);
  return out;
}

}  // namespace

TEST_CASE("memory capacity") {
  CHECK(memory_capacity(SlotRatio(1), 5, 17) == 85);
  CHECK(memory_capacity(SlotRatio(2), 5, 17) == 170);
  CHECK(memory_capacity(SlotRatio(1, 2), 5, 17) == 42);
  CHECK(memory_capacity(SlotRatio(3, 4), 5, 17) == 64);
  CHECK(memory_capacity(SlotRatio(1), 10, 17) == 170);
  CHECK(memory_capacity(SlotRatio(2), 10, 17) == 340);
  CHECK(memory_capacity(SlotRatio(1, 2), 10, 17) == 85);
  CHECK(memory_capacity(SlotRatio(3, 4), 10, 17) == 128);
  // Half-way products round to even.
  CHECK(memory_capacity(SlotRatio(1, 2), 1, 5) == 2);
  CHECK(memory_capacity(SlotRatio(1, 2), 1, 7) == 4);
  CHECK_THROWS(memory_capacity(SlotRatio(0), 5, 17));
}

TEST_CASE("ring buffer") {
  RingBuffer r(2);
  r.push(item(0, 1));
  r.push(item(0, 2));
  r.push(item(0, 3));
  CHECK(ids(r.queue(0)) == std::vector<int>{2, 3});

  r.push(item(5, 4));
  CHECK(ids(r.queue(5)) == std::vector<int>{4});
  CHECK(ids(r.queue(0)) == std::vector<int>{2, 3});
  CHECK(r.classes() == std::vector<int>{0, 5});
  CHECK(r.size() == 3);
  CHECK(r.items().front().source_id == 2);

  r.set_capacity_per_class(1);
  CHECK(ids(r.queue(0)) == std::vector<int>{3});

  RingBuffer none(0);
  for (int i = 0; i < 5; ++i) none.push(item(i, i));
  CHECK(none.empty());

  RingBuffer limited(1);
  limited.set_class_limit(2);
  for (int i = 0; i < 4; ++i) limited.push(item(i, i));
  CHECK(limited.classes() == std::vector<int>{0, 1});
  r.clear();
  CHECK(r.empty());
}

TEST_CASE("ER-RING slot policy") {
  RingBuffer r;
  apply_er_ring_policy(r, 85, 10);
  CHECK(r.capacity_per_class() == 8);
  apply_er_ring_policy(r, 42, 85);
  CHECK(r.capacity_per_class() == 1);
  for (int i = 0; i < 85; ++i) r.push(item(i, i));
  CHECK(r.size() == 42);
  CHECK(r.classes().back() == 41);
}

TEST_CASE("reservoir keeps everything until full") {
  ReservoirBuffer b(10);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    b.push(item(0, i), rng);
    CHECK(b.seen() == std::uint64_t(i + 1));
  }
  std::set<int> kept;
  for (const auto& e : b.items()) kept.insert(e.source_id);
  CHECK(kept.size() == 10);
}

TEST_CASE("reservoir sampling is uniform") {
  // Capacity 1 over a 10,000 item stream, 10,000 trials: each item's count
  // is Binomial(10^4, 10^-4). The number of items outside mean +- 3 sigma is
  // compared with its own expectation, then deciles get a chi-square test.
  constexpr int n = 10000, trials = 10000;
  std::vector<int> counts(n, 0);
  Rng rng(2);
  for (int t = 0; t < trials; ++t) {
    ReservoirBuffer b(1);
    for (int i = 0; i < n; ++i) b.push(item(0, i), rng);
    ++counts[static_cast<std::size_t>(b.items().front().source_id)];
  }
  const double p = 1.0 / n, mean = trials * p, sigma = std::sqrt(trials * p * (1 - p));
  double inside = 0.0, pk = std::pow(1 - p, trials);
  for (int k = 0; k <= trials && k <= mean + 3 * sigma; ++k) {
    if (k >= mean - 3 * sigma) inside += pk;
    pk *= double(trials - k) / (k + 1) * p / (1 - p);
  }
  const double expected_out = n * (1 - inside), sd_out = std::sqrt(n * inside * (1 - inside));
  int out = 0;
  for (int c : counts) out += std::abs(c - mean) > 3 * sigma ? 1 : 0;
  CHECK(out <= expected_out + 5 * sd_out);

  auto decile_chi = [](const std::vector<int>& c, double per_decile) {
    double chi = 0.0;
    for (int d = 0; d < 10; ++d) {
      int s = 0;
      for (int i = d * 1000; i < (d + 1) * 1000; ++i) s += c[static_cast<std::size_t>(i)];
      chi += (s - per_decile) * (s - per_decile) / per_decile;
    }
    return chi;
  };
  CHECK(decile_chi(counts, 1000.0) < 21.67);  // 9 degrees of freedom, p = 0.01

  std::vector<int> five(n, 0);
  for (int t = 0; t < 2000; ++t) {
    ReservoirBuffer b(5);
    for (int i = 0; i < n; ++i) b.push(item(0, i), rng);
    for (const auto& e : b.items()) ++five[static_cast<std::size_t>(e.source_id)];
  }
  CHECK(decile_chi(five, 1000.0) < 21.67);
}

TEST_CASE("replay sampling") {
  Rng rng(3);
  EpisodicMemory small(5);
  for (int i = 0; i < 5; ++i) {
    MemoryPatch p;
    p.source_id = i;
    p.task_id = 1;
    small.add(p);
  }
  const auto with_repeats = sample_replay(small, 10, rng);
  CHECK(with_repeats.size() == 10);
  for (const auto& p : with_repeats) CHECK(p.source_id < 5);

  ReservoirBuffer big(100);
  for (int i = 0; i < 100; ++i) big.push(item(0, i), rng);
  std::set<int> distinct;
  for (const auto& e : sample_replay(big, 10, rng)) distinct.insert(e.source_id);
  CHECK(distinct.size() == 10);

  CHECK(sample_replay(EpisodicMemory{}, 10, rng).empty());
  CHECK(sample_replay(RingBuffer{}, 10, rng).empty());
  CHECK(sample_indices(0, 3, rng).empty());
}

TEST_CASE("episodic memory limits") {
  EpisodicMemory m(2);
  MemoryPatch p;
  p.pixels = Tensor({3, 4, 4});
  p.task_id = 1;
  p.label = 3;
  m.add(p);
  m.add(p);
  CHECK_THROWS_AS(m.add(p), std::length_error);
  CHECK(m.count(1, 3) == 2);
  CHECK(m.total_area() == 32);
  const auto snap = snapshot_json(m);
  CHECK(!snap.empty());
}
