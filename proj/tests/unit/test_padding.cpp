#include <doctest.h>

#include <cmath>
#include <map>

#include "epr/packing.hpp"
#include "epr/padding.hpp"
#include "support.hpp"

using namespace epr;

namespace {

MemoryPatch ones(int wp, int x, int y) {
  MemoryPatch p;
  p.pixels = Tensor({1, wp, wp}, 1.0f);
  p.x = x;
  p.y = y;
  return p;
}

double chi_square(const std::map<std::pair<int, int>, int>& counts, int cells, int draws) {
  const double expected = double(draws) / cells;
  double chi = 0.0;
  for (const auto& [k, c] : counts) chi += (c - expected) * (c - expected) / expected;
  chi += (cells - double(counts.size())) * expected;
  return chi;
}

}  // namespace

TEST_CASE("zero padding places the patch exactly") {
  const Tensor img = zero_pad(ones(2, 1, 1), 4, 4);
  CHECK(img.shape() == Shape{1, 4, 4});
  double total = 0.0;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const bool inside = r >= 1 && r <= 2 && c >= 1 && c <= 2;
      CHECK(img.at(0, r, c) == (inside ? 1.0f : 0.0f));
      total += img.at(0, r, c);
    }
  }
  CHECK(total == 4.0);

  std::mt19937_64 rng(1);
  MemoryPatch p;
  p.pixels = testing::random_tensor({3, 5, 5}, rng);
  p.x = 3;
  p.y = 0;
  const Tensor padded = zero_pad(p, 8, 8);
  CHECK(extract_patch(padded, 3, 0, 5) == p.pixels);
  double a = 0.0, b = 0.0;
  for (float v : padded.values()) a += v;
  for (float v : p.pixels.values()) b += v;
  CHECK(a == doctest::Approx(b));
  CHECK_THROWS(zero_pad(ones(2, 3, 3), 4, 4));
}

TEST_CASE("random padding fills the complement with standard normals") {
  Rng rng(2);
  const MemoryPatch p = ones(8, 4, 6);
  const Tensor img = random_pad(p, 40, 40, rng);
  CHECK(extract_patch(img, 4, 6, 8) == p.pixels);
  double s = 0.0, sq = 0.0;
  int n = 0;
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 40; ++c) {
      if (r >= 4 && r < 12 && c >= 6 && c < 14) continue;
      s += img.at(0, r, c);
      sq += double(img.at(0, r, c)) * img.at(0, r, c);
      ++n;
    }
  }
  REQUIRE(n >= 1000);
  const double mean = s / n, sd = std::sqrt(sq / n - mean * mean);
  CHECK(mean >= -0.1);
  CHECK(mean <= 0.1);
  CHECK(sd >= 0.9);
  CHECK(sd <= 1.1);
  const Tensor other = random_pad(p, 40, 40, rng);
  CHECK(other.at(0, 0, 0) != img.at(0, 0, 0));
}

TEST_CASE("random placement is uniform over valid corners") {
  Rng rng(3);
  const MemoryPatch p = ones(5, 0, 0);
  std::map<std::pair<int, int>, int> counts;
  constexpr int draws = 4000, w = 8, wp = 5, cells = (w - wp + 1) * (w - wp + 1);
  for (int i = 0; i < draws; ++i) {
    const Tensor img = random_place(p, w, w, rng);
    int x = -1, y = -1;
    for (int r = 0; r < w && x < 0; ++r) {
      for (int c = 0; c < w; ++c) {
        if (img.at(0, r, c) == 1.0f) {
          x = r;
          y = c;
          break;
        }
      }
    }
    REQUIRE(x >= 0);
    CHECK(x + wp <= w);
    CHECK(y + wp <= w);
    ++counts[{x, y}];
  }
  CHECK(counts.size() == std::size_t(cells));
  CHECK(chi_square(counts, cells, draws) < 37.7);  // 15 degrees of freedom, p = 0.001

  const MemoryPatch full = ones(8, 0, 0);
  CHECK(random_place(full, 8, 8, rng) == zero_pad(full, 8, 8));
}

TEST_CASE("random snip keeps true coordinates") {
  Rng rng(4);
  std::mt19937_64 gen(5);
  const auto img = std::make_shared<const Tensor>(testing::random_tensor({3, 10, 10}, gen));
  const Example ex{img, 2, 7, 1, 42};
  std::map<std::pair<int, int>, int> counts;
  constexpr int draws = 2000, wp = 6, cells = 25;
  for (int i = 0; i < draws; ++i) {
    const MemoryPatch p = random_snip(ex, wp, rng);
    CHECK(p.x + wp <= 10);
    CHECK(p.y + wp <= 10);
    CHECK(p.pixels == extract_patch(*img, p.x, p.y, wp));
    CHECK(p.task_id == 2);
    CHECK(p.label == 7);
    CHECK(p.head_index == 1);
    CHECK(p.source_id == 42);
    ++counts[{p.x, p.y}];
  }
  CHECK(counts.size() == std::size_t(cells));
  CHECK(chi_square(counts, cells, draws) < 51.2);  // 24 degrees of freedom, p = 0.001
}
