#include <doctest.h>

#include <random>

#include "epr/saliency.hpp"
#include "epr/trainer.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace epr;

namespace {

oracle::Stack to_stack(const Tensor& t) {
  oracle::Stack s(t.dim(0), oracle::Matrix(t.dim(1), std::vector<double>(t.dim(2))));
  for (int k = 0; k < t.dim(0); ++k) {
    for (int r = 0; r < t.dim(1); ++r) {
      for (int c = 0; c < t.dim(2); ++c) s[k][r][c] = t.at(k, r, c);
    }
  }
  return s;
}

TargetCapture random_capture(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 8);
  const int m = size(rng), u = size(rng), v = size(rng);
  return {testing::random_tensor({m, u, v}, rng), testing::random_tensor({m, u, v}, rng)};
}

}  // namespace

TEST_CASE("importance weights") {
  TargetCapture cap{Tensor({3, 2, 2}, 5.0f), Tensor({3, 2, 2}, 1.0f)};
  CHECK(importance_weights(cap) == std::vector<double>{1.0, 1.0, 1.0});
  for (int i = 0; i < 4; ++i) cap.gradients[4 + i] = 0.25f;
  CHECK(importance_weights(cap)[1] == doctest::Approx(0.25));

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const TargetCapture c = random_capture(rng);
    const auto got = importance_weights(c);
    const auto want = oracle::channel_means(to_stack(c.gradients));
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(std::abs(got[k] - want[k]) <= 1e-9);
  }
  CHECK_THROWS(importance_weights({Tensor({2, 2, 2}), Tensor({2, 2, 3})}));
}

TEST_CASE("localization map") {
  const Tensor acts = Tensor({2, 3, 3}, 1.0f);
  for (double v : localization_map(std::vector<double>{0.0, 0.0}, acts).values) CHECK(v == 0.0);
  for (double v : localization_map(std::vector<double>{1.0}, Tensor({1, 2, 2}, -3.0f)).values) CHECK(v == 0.0);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const TargetCapture c = random_capture(rng);
    std::vector<double> alpha(static_cast<std::size_t>(c.activations.dim(0)));
    for (double& a : alpha) a = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    const Grid got = localization_map(alpha, c.activations);
    const auto want = oracle::weighted_relu_sum(alpha, to_stack(c.activations));
    for (int r = 0; r < got.rows; ++r) {
      for (int col = 0; col < got.cols; ++col) CHECK(std::abs(got.at(r, col) - want[r][col]) <= 1e-9);
    }
  }
  CHECK_THROWS(localization_map(std::vector<double>{1.0}, acts));
}

TEST_CASE("bilinear upsampling") {
  const Grid constant(3, 5, 0.7);
  for (double v : upsample_bilinear(constant, 11, 7).values) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));

  Grid g(4, 4);
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = double(i) * 0.3;
  CHECK(upsample_bilinear(g, 4, 4).values == g.values);

  Grid checker(2, 2);
  checker.at(0, 1) = 1.0;
  checker.at(1, 0) = 1.0;
  const Grid up = upsample_bilinear(checker, 4, 4);
  const auto want = oracle::tent_resize({{0.0, 1.0}, {1.0, 0.0}}, 4, 4);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      CHECK(up.at(r, c) >= 0.0);
      CHECK(up.at(r, c) <= 1.0);
      CHECK(std::abs(up.at(r, c) - want[r][c]) <= 1e-6);
    }
  }
  CHECK(up.at(1, 1) == doctest::Approx(0.375));
  CHECK(up.at(0, 0) == doctest::Approx(0.0));
  CHECK_THROWS(upsample_bilinear(Grid(), 4, 4));
}

TEST_CASE("full pipeline against the reference on random captures") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const TargetCapture c = random_capture(rng);
    const int width = std::uniform_int_distribution<int>(8, 32)(rng);
    const Grid got =
        upsample_bilinear(localization_map(importance_weights(c), c.activations), width, width);
    const auto want = oracle::grad_cam(to_stack(c.activations), to_stack(c.gradients), width);
    double worst = 0.0;
    for (int r = 0; r < width; ++r) {
      for (int col = 0; col < width; ++col) worst = std::max(worst, std::abs(got.at(r, col) - want[r][col]));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("saliency of an untrained model") {
  ModelConfig mc;
  mc.n_tasks = 1;
  mc.classes_per_task = 2;
  mc.width = 16;
  mc.seed = 4;
  MultiHeadModel m(mc);
  const auto before = m.parameters().front()->value;
  std::mt19937_64 rng(5);
  const Tensor img = testing::random_tensor({3, 16, 16}, rng, 0.0f, 1.0f);
  const SaliencyMap a = generate_saliency(m, img, 1, 1);
  const SaliencyMap b = generate_saliency(m, img, 1, 1);
  CHECK(a.values.rows == 16);
  CHECK(a.values.cols == 16);
  CHECK(a.values.min() >= 0.0);
  CHECK(a.values.values == b.values.values);
  CHECK(a.source_class == 1);
  CHECK(m.parameters().front()->value == before);

  const auto dir = testing::scratch_dir("saliency");
  dump_saliency(a, dir / "map.png", dir / "map.json");
  CHECK(std::filesystem::file_size(dir / "map.png") > 0);
  CHECK(std::filesystem::exists(dir / "map.json"));
}

TEST_CASE("trained saliency concentrates on the glyph") {
  SyntheticOptions o;
  o.n_classes = 2;
  o.per_class_train = 250;
  o.per_class_test = 50;
  o.background_noise = 0.5f;
  o.seed = 2;
  const Dataset d = generate_synthetic_dataset(o);
  const TaskStream s = build_split_stream(d, 1, 2, 1);
  ModelConfig mc;
  mc.n_tasks = 1;
  mc.classes_per_task = 2;
  mc.seed = 1;
  MultiHeadModel m(mc);
  MethodConfig cfg;
  cfg.method = Method::finetune;
  cfg.seed = 1;
  train_continual(s.tasks, m, cfg);

  int correct = 0, focused = 0;
  for (const Example& e : s.tasks[0].test) {
    if (m.predict_topk(*e.image, 1, 1).front() != e.head_index) continue;
    ++correct;
    const Grid sal = generate_saliency(m, *e.image, e.head_index, 1).values;
    const Box& box = d.test.boxes.at(static_cast<std::size_t>(e.source_id));
    double in = 0.0, out = 0.0;
    int n_in = 0, n_out = 0;
    for (int r = 0; r < sal.rows; ++r) {
      for (int c = 0; c < sal.cols; ++c) {
        const bool inside = r >= box.x && r < box.x + box.h && c >= box.y && c < box.y + box.w;
        (inside ? in : out) += sal.at(r, c);
        ++(inside ? n_in : n_out);
      }
    }
    if (in / n_in > out / n_out) ++focused;
  }
  REQUIRE(correct >= 50);
  MESSAGE(focused << " of " << correct << " correctly classified images");
  CHECK(double(focused) >= 0.7 * correct);
}
