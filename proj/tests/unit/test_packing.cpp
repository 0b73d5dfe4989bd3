#include <doctest.h>

#include <random>

#include "epr/packing.hpp"
#include "epr/padding.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace epr;

TEST_CASE("patch width table") {
  struct Row {
    const char* n_sc;
    int epf, width, expected;
  };
  // CIFAR (32), miniImageNet (84) and CUB (224) settings.
  const Row rows[] = {
      {"2", 3, 32, 26},    {"1", 2, 32, 22},    {"0.75", 1, 32, 27}, {"0.5", 1, 32, 22},
      {"2", 5, 84, 53},    {"1", 3, 84, 48},    {"0.75", 2, 84, 51}, {"0.5", 2, 84, 42},
      {"2", 7, 224, 119},  {"1", 4, 224, 112},  {"0.75", 3, 224, 112}, {"0.5", 2, 224, 112},
  };
  for (const Row& r : rows) {
    INFO(r.n_sc << " " << r.epf << " " << r.width);
    CHECK(patch_width(SlotRatio::parse(r.n_sc), r.epf, r.width) == r.expected);
  }
  for (int w = 2; w <= 64; w += 2) CHECK(patch_width(SlotRatio(1), 4, w) == w / 2);
  CHECK_THROWS(patch_width(SlotRatio(1, 100), 4, 4));
  CHECK_THROWS(patch_width(SlotRatio(1), 0, 32));
  CHECK_THROWS(patch_width(SlotRatio(2), 1, 32));
}

TEST_CASE("patch width is the exact floor") {
  for (int num = 1; num <= 12; ++num) {
    for (int den : {1, 2, 4, 3}) {
      const SlotRatio n(num, den);
      for (int epf = 1; epf <= 8; ++epf) {
        for (int w : {16, 32, 84}) {
          long budget = long(num) * w * w;
          long unit = long(den) * epf;
          long p = 0;
          while (unit * (p + 1) * (p + 1) <= budget) ++p;
          if (p == 0 || p > w) {
            CHECK_THROWS(patch_width(n, epf, w));
          } else {
            CHECK(patch_width(n, epf, w) == p);
          }
        }
      }
    }
  }
}

TEST_CASE("packing factor of a patch width") {
  CHECK(epf_of(SlotRatio(1), 32, 16) == SlotRatio(4));
  CHECK(epf_of(SlotRatio(1), 32, 32) == SlotRatio(1));
  CHECK(epf_of(SlotRatio(1, 2), 84, 42) == SlotRatio(2));
  CHECK_THROWS(epf_of(SlotRatio(1), 32, 0));
}

TEST_CASE("pooling positions") {
  CHECK(pooling_positions(8, 4, 1) == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(pooling_positions(8, 3, 2) == std::vector<int>{0, 2, 4, 5});
  CHECK(pooling_positions(8, 8, 3) == std::vector<int>{0});
  CHECK_THROWS(pooling_positions(8, 9, 1));
  CHECK_THROWS(pooling_positions(8, 4, 0));
}

TEST_CASE("salient window examples") {
  Grid hot(8, 8);
  hot.at(5, 5) = 1.0;
  const PatchCorner c = locate_salient_patch(hot, 4, 1);
  CHECK(c == PatchCorner{2, 2});
  CHECK(c.x <= 5);
  CHECK(c.x + 4 > 5);

  CHECK(locate_salient_patch(Grid(8, 8, 0.3), 3, 1) == PatchCorner{0, 0});
  Grid any(6, 6);
  any.at(4, 1) = 9.0;
  CHECK(locate_salient_patch(any, 6, 2) == PatchCorner{0, 0});
}

TEST_CASE("salient window matches an exhaustive scan") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = std::uniform_int_distribution<int>(4, 20)(rng);
    const int wp = std::uniform_int_distribution<int>(4, w)(rng);
    const int stride = std::uniform_int_distribution<int>(1, 3)(rng);
    // Eighths keep every window sum exact, so ties are real ties.
    const bool exact = trial % 2 == 0;
    Grid g(w, w);
    oracle::Matrix m(w, std::vector<double>(w));
    for (int r = 0; r < w; ++r) {
      for (int col = 0; col < w; ++col) {
        const double v = exact ? std::uniform_int_distribution<int>(0, 3)(rng) / 8.0
                               : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        g.at(r, col) = v;
        m[r][col] = v;
      }
    }
    const PatchCorner got = locate_salient_patch(g, wp, stride);
    const oracle::Corner want = oracle::best_window(m, wp, stride);
    INFO("W=" << w << " Wp=" << wp << " S=" << stride);
    if (exact) {
      CHECK(got.x == want.x);
      CHECK(got.y == want.y);
    } else {
      CHECK(oracle::window_mean(m, {got.x, got.y}, wp) ==
            doctest::Approx(oracle::window_mean(m, want, wp)).epsilon(1e-12));
    }
  }
}

TEST_CASE("patch extraction") {
  std::mt19937_64 rng(8);
  const Tensor img = testing::random_tensor({3, 8, 8}, rng);
  CHECK(extract_patch(img, 0, 0, 8) == img);
  const Tensor flat({3, 8, 8}, 0.4f);
  const Tensor flat_crop = extract_patch(flat, 2, 3, 4);
  for (float v : flat_crop.values()) CHECK(v == 0.4f);

  MemoryPatch p;
  p.pixels = testing::random_tensor({3, 3, 3}, rng);
  p.x = 4;
  p.y = 1;
  CHECK(extract_patch(zero_pad(p, 8, 8), 4, 1, 3) == p.pixels);

  const Tensor crop = extract_patch(img, 1, 2, 3);
  CHECK(crop.at(2, 0, 0) == img.at(2, 1, 2));
  CHECK(crop.at(0, 2, 1) == img.at(0, 3, 3));
  CHECK_THROWS(extract_patch(img, 6, 0, 3));
  CHECK_THROWS(extract_patch(img, -1, 0, 3));
}

namespace {

// One head with zero weights and a bias that fixes the class ranking.
MultiHeadModel rigged_model(const std::vector<float>& bias) {
  ModelConfig mc;
  mc.n_tasks = 1;
  mc.classes_per_task = static_cast<int>(bias.size());
  mc.width = 8;
  MultiHeadModel m(mc);
  m.head(1).weight().value.fill(0.0f);
  for (std::size_t i = 0; i < bias.size(); ++i) m.head(1).bias().value[i] = bias[i];
  return m;
}

MemoryPatch patch_for(int head_index) {
  MemoryPatch p;
  p.pixels = Tensor({3, 4, 4}, 0.5f);
  p.task_id = 1;
  p.head_index = head_index;
  p.label = head_index;
  return p;
}

}  // namespace

TEST_CASE("candidate tiers") {
  MultiHeadModel m = rigged_model({0.1f, 0.5f, 0.3f, 0.2f, 0.4f});
  CHECK(classify_candidate(m, patch_for(1), 1) == PredictionTier::correct);
  CHECK(classify_candidate(m, patch_for(2), 1) == PredictionTier::top3);  // ranked 3rd
  CHECK(classify_candidate(m, patch_for(0), 1) == PredictionTier::other);  // ranked 5th
  CHECK(classify_candidate(m, patch_for(3), 1) == PredictionTier::other);
}

TEST_CASE("patch selection by tier") {
  std::vector<PatchCandidate> list;
  int id = 0;
  for (PredictionTier t : {PredictionTier::other, PredictionTier::correct, PredictionTier::top3,
                           PredictionTier::correct}) {
    PatchCandidate c;
    c.tier = t;
    c.patch.source_id = id++;
    list.push_back(c);
  }
  auto ids = [](const std::vector<PatchCandidate>& v) {
    std::vector<int> out;
    for (const auto& c : v) out.push_back(c.patch.source_id);
    return out;
  };
  CHECK(ids(select_patches(list, 2)) == std::vector<int>{1, 3});
  CHECK(ids(select_patches(list, 3)) == std::vector<int>{1, 3, 2});
  CHECK(ids(select_patches(list, 10)) == std::vector<int>{1, 3, 2, 0});
  CHECK(select_patches(list, 0).empty());
  CHECK_THROWS(select_patches(list, -1));
}

TEST_CASE("memory update fills each class quota") {
  const TaskStream s = testing::small_stream(1, 2, 6, 3, 32);
  ModelConfig mc;
  mc.n_tasks = 1;
  mc.classes_per_task = 2;
  MultiHeadModel m(mc);
  RingBuffer staging(4);
  for (const auto& e : s.tasks[0].train) staging.push(e);

  PackingConfig pc;
  pc.n_sc = SlotRatio(1);
  pc.epf = 2;
  pc.width = 32;
  EpisodicMemory mem(2);
  const MemoryUpdateReport rep = update_memory(mem, staging, m, pc);
  CHECK(rep.patches_added == 4);
  CHECK(mem.size() == 4);
  for (const auto& p : mem.patches()) {
    CHECK(p.width() == patch_width(SlotRatio(1), 2, 32));
    CHECK(p.x + p.width() <= 32);
    CHECK(s.tasks[0].owns_label(p.label));
  }
  for (int label : s.tasks[0].label_set) CHECK(mem.count(1, label) == 2);

  SUBCASE("tier ranking off still fills from the other tier") {
    pc.prioritize_predictions = false;
    EpisodicMemory other(2);
    const auto r = update_memory(other, staging, m, pc);
    CHECK(r.tier_counts[2] == 4);
    CHECK(other.size() == 4);
  }
  SUBCASE("random locator needs an RNG") {
    pc.locator = PatchLocator::random;
    EpisodicMemory other(2);
    CHECK_THROWS(update_memory(other, staging, m, pc));
    Rng rng(1);
    CHECK(update_memory(other, staging, m, pc, &rng).patches_added == 4);
  }
  SUBCASE("a full class takes no more patches") {
    const auto again = update_memory(mem, staging, m, pc);
    CHECK(again.patches_added == 0);
  }
}
