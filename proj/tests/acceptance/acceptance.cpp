// Acceptance checks, one line per criterion: PASS, FAIL or SKIP.
// Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "epr/experiment.hpp"
#include "epr/memory.hpp"
#include "epr/metrics.hpp"
#include "epr/packing.hpp"
#include "epr/saliency.hpp"
#include "oracles.hpp"

using namespace epr;
namespace fs = std::filesystem;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict = Verdict::fail;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {Verdict::fail, std::string("exception: ") + e.what()};
  }
  const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
  if (o.verdict == Verdict::fail) ++failures;
  std::cout << tag << " [" << id << "] " << title << ": " << o.detail << std::endl;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

fs::path out_root() {
  const char* env = std::getenv("EPR_ACCEPTANCE_OUT");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "epr_acceptance";
  fs::create_directories(root);
  return root;
}

fs::path fresh(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome patch_width_table() {
  struct Row {
    const char* n_sc;
    int epf, width, expected;
  };
  const Row rows[] = {
      {"2", 3, 32, 26},   {"1", 2, 32, 22},   {"0.75", 1, 32, 27},  {"0.5", 1, 32, 22},
      {"2", 5, 84, 53},   {"1", 3, 84, 48},   {"0.75", 2, 84, 51},  {"0.5", 2, 84, 42},
      {"2", 7, 224, 119}, {"1", 4, 224, 112}, {"0.75", 3, 224, 112}, {"0.5", 2, 224, 112},
  };
  int wrong = 0;
  std::string first;
  for (const Row& r : rows) {
    const int got = patch_width(SlotRatio::parse(r.n_sc), r.epf, r.width);
    if (got != r.expected && wrong++ == 0) {
      first = std::string(" first mismatch (") + r.n_sc + "," + std::to_string(r.epf) + "," +
              std::to_string(r.width) + ")->" + std::to_string(got);
    }
  }
  return check(wrong == 0, std::to_string(std::size(rows) - wrong) + "/" + std::to_string(std::size(rows)) +
                               " rows" + first);
}

Outcome capacities() {
  std::vector<long> cifar, cub;
  for (const char* n : {"0.5", "0.75", "1", "2"}) {
    cifar.push_back(memory_capacity(SlotRatio::parse(n), 5, 17));
    cub.push_back(memory_capacity(SlotRatio::parse(n), 10, 17));
  }
  const bool ok = cifar == std::vector<long>{42, 64, 85, 170} && cub == std::vector<long>{85, 128, 170, 340};
  auto join = [](const std::vector<long>& v) {
    std::string s;
    for (long x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
    return "{" + s + "}";
  };
  return check(ok, "5 classes/task " + join(cifar) + ", 10 classes/task " + join(cub));
}

oracle::Stack to_stack(const Tensor& t) {
  oracle::Stack s(t.dim(0), oracle::Matrix(t.dim(1), std::vector<double>(t.dim(2))));
  for (int k = 0; k < t.dim(0); ++k) {
    for (int r = 0; r < t.dim(1); ++r) {
      for (int c = 0; c < t.dim(2); ++c) s[k][r][c] = t.at(k, r, c);
    }
  }
  return s;
}

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng) {
  Tensor t(shape);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  for (float& v : t.values()) v = d(rng);
  return t;
}

Outcome grad_cam_oracle() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(1, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = size(rng), u = size(rng), v = size(rng);
    const TargetCapture c{random_tensor({m, u, v}, rng), random_tensor({m, u, v}, rng)};
    const int width = std::uniform_int_distribution<int>(8, 32)(rng);
    const Grid got = upsample_bilinear(localization_map(importance_weights(c), c.activations), width, width);
    const auto want = oracle::grad_cam(to_stack(c.activations), to_stack(c.gradients), width);
    for (int r = 0; r < width; ++r) {
      for (int col = 0; col < width; ++col) worst = std::max(worst, std::abs(got.at(r, col) - want[r][col]));
    }
  }
  return check(worst <= 1e-6, "100 captures, max abs error " + fmt(worst, 3));
}

Outcome pooling_oracle() {
  std::mt19937_64 rng(202);
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = std::uniform_int_distribution<int>(4, 32)(rng);
    const int wp = std::uniform_int_distribution<int>(4, w)(rng);
    const int stride = std::uniform_int_distribution<int>(1, 3)(rng);
    // Half the maps use eighths so window sums are exact and ties are real.
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
    if (got.x == want.x && got.y == want.y) ++agree;
  }
  return check(agree == 1000, std::to_string(agree) + "/1000 maps agree");
}

Outcome metric_oracle() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int t = std::uniform_int_distribution<int>(2, 20)(rng);
    oracle::Matrix m(t, std::vector<double>(t));
    ResultMatrix r(t);
    for (auto& row : m) {
      for (double& v : row) v = std::uniform_real_distribution<double>(0, 1)(rng);
      r.add_row(row);
    }
    worst = std::max({worst, std::abs(acc_metric(r) - oracle::acc(m)), std::abs(bwt_metric(r) - oracle::bwt(m))});
  }
  ResultMatrix ex(2);
  ex.add_row({0.9, 0.0});
  ex.add_row({0.8, 0.7});
  const double a = acc_metric(ex), b = bwt_metric(ex);
  const bool example_ok = std::abs(a - 0.75) <= 1e-12 && std::abs(b + 0.1) <= 1e-12;
  return check(worst <= 1e-12 && example_ok,
               "max error " + fmt(worst, 3) + " on 100 matrices; 2x2 example ACC " + fmt(a) + " BWT " + fmt(b));
}

// The desk-scale synthetic experiment shared by criteria 6 to 9 and 11.
ExperimentConfig synthetic_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.methods = {"finetune", "er-ring", "epr"};
  cfg.n_sc = {"1", "0.5"};
  cfg.seeds = {1, 2, 3};
  cfg.informativeness_epochs = 100;
  cfg.memory_snapshot = false;
  cfg.out = out.string();
  return cfg;
}

struct Runs {
  std::vector<RunRecord> all;

  std::vector<const RunRecord*> select(const std::string& method, const std::string& n_sc) const {
    std::vector<const RunRecord*> out;
    for (const auto& r : all) {
      if (r.method == method && (n_sc.empty() || r.n_sc == n_sc)) out.push_back(&r);
    }
    return out;
  }

  // Mean of a field over the matching runs; NaN when any run failed.
  double mean(const std::string& method, const std::string& n_sc,
              const std::function<std::optional<double>(const RunRecord&)>& field) const {
    const auto runs = select(method, n_sc);
    if (runs.empty()) return std::nan("");
    double s = 0.0;
    for (const RunRecord* r : runs) {
      const auto v = field(*r);
      if (!r->ok || !v) return std::nan("");
      s += *v;
    }
    return s / static_cast<double>(runs.size());
  }

  double acc(const std::string& method, const std::string& n_sc = "") const {
    return mean(method, n_sc, [](const RunRecord& r) { return r.acc; });
  }
};

Outcome ordering(const Runs& runs) {
  const double epr = runs.acc("epr", "1"), er = runs.acc("er-ring", "1"), ft = runs.acc("finetune");
  const bool ok = epr >= er && er >= ft && (epr - ft) * 100.0 >= 5.0;
  return check(ok, "mean ACC EPR " + fmt(100 * epr) + ", ER-RING " + fmt(100 * er) + ", Finetune " +
                       fmt(100 * ft) + " (n_sc 1)");
}

Outcome resilience(const Runs& runs) {
  const double epr_drop = runs.acc("epr", "1") - runs.acc("epr", "0.5");
  const double er_drop = runs.acc("er-ring", "1") - runs.acc("er-ring", "0.5");
  return check(epr_drop < er_drop,
               "ACC drop n_sc 1 -> 0.5: EPR " + fmt(100 * epr_drop) + ", ER-RING " + fmt(100 * er_drop));
}

Outcome informativeness(const Runs& runs) {
  auto field = [](const RunRecord& r) { return r.informativeness; };
  const double epr = runs.mean("epr", "1", field), er = runs.mean("er-ring", "1", field);
  return check(epr >= er, "joint training on the buffer: EPR " + fmt(100 * epr) + ", ER-RING " + fmt(100 * er));
}

Outcome localization(const Runs& runs) {
  long patches = 0;
  double hits = 0.0;
  for (const RunRecord* r : runs.select("epr", "")) {
    if (!r->localization) return check(false, "run without a localization record: " + r->dir.string());
    const long n = r->metrics.at("localization").at("patches").get<long>();
    patches += n;
    hits += r->metrics.at("localization").at("iou_at_least_0.25").get<double>();
  }
  const double frac = patches ? hits / static_cast<double>(patches) : 0.0;
  return check(patches > 0 && frac >= 0.6, fmt(hits, 6) + "/" + std::to_string(patches) +
                                                " EPR patches with IoU >= 0.25 (" + fmt(100 * frac) + "%)");
}

Outcome determinism(const fs::path& first_root, const fs::path& second_root) {
  run_experiment(synthetic_config(second_root));
  int compared = 0, differ = 0;
  for (const auto& d : find_run_dirs(first_root)) {
    const fs::path other = second_root / d.filename() / "result_matrix.csv";
    ++compared;
    if (!fs::exists(other) || slurp(d / "result_matrix.csv") != slurp(other)) ++differ;
  }
  return check(compared > 0 && differ == 0,
               std::to_string(compared - differ) + "/" + std::to_string(compared) + " result_matrix.csv identical");
}

Outcome full_scale() {
  const char* dir = std::getenv("EPR_CIFAR_DIR");
  if (!dir || !fs::is_directory(dir)) {
    return {Verdict::skip, "set EPR_CIFAR_DIR to a CIFAR-100 binary directory to run (hours on CPU)"};
  }
  ExperimentConfig cfg;
  cfg.dataset = "cifar-dir";
  cfg.data_dir = dir;
  cfg.arch = "reduced-resnet18";
  cfg.n_tasks = 17;
  cfg.cv_tasks = 3;
  cfg.classes_per_task = 5;
  cfg.methods = {"er-ring", "epr"};
  cfg.n_sc = {"1"};
  cfg.epf = {2};
  cfg.stride = {1};
  cfg.lr = {0.003, 0.01, 0.03, 0.1, 0.3, 1.0};
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.memory_snapshot = false;
  cfg.out = fresh(out_root() / "cifar").string();
  const Runs runs{run_experiment(cfg, true).runs};
  const double epr = runs.acc("epr", "1");
  int wins = 0, pairs = 0;
  for (const RunRecord* e : runs.select("epr", "1")) {
    for (const RunRecord* r : runs.select("er-ring", "1")) {
      if (r->seed != e->seed || !r->acc || !e->acc) continue;
      ++pairs;
      wins += *e->acc > *r->acc ? 1 : 0;
    }
  }
  const bool ok = std::abs(100 * epr - 58.5) <= 3.0 && runs.acc("epr", "1") > runs.acc("er-ring", "1");
  return check(ok, "EPR ACC " + fmt(100 * epr) + " (58.5 +- 3), ER-RING " + fmt(100 * runs.acc("er-ring", "1")) +
                       ", EPR ahead on " + std::to_string(wins) + "/" + std::to_string(pairs) + " seeds");
}

}  // namespace

int main() {
  report(1, "patch width table", patch_width_table);
  report(2, "memory capacity", capacities);
  report(3, "Grad-CAM oracle", grad_cam_oracle);
  report(4, "pooling argmax oracle", pooling_oracle);
  report(5, "metric oracles", metric_oracle);

  const fs::path root = out_root();
  const fs::path first = fresh(root / "synthetic");
  Runs runs;
  std::string setup_error;
  try {
    runs.all = run_experiment(synthetic_config(first)).runs;
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  auto synthetic = [&](int id, const std::string& title, Outcome (*body)(const Runs&)) {
    report(id, title, [&] { return setup_error.empty() ? body(runs) : check(false, setup_error); });
  };
  synthetic(6, "synthetic ordering", ordering);
  synthetic(7, "memory-size resilience", resilience);
  synthetic(8, "buffer informativeness", informativeness);
  synthetic(9, "saliency localization", localization);
  report(10, "full-scale Split CIFAR", full_scale);
  report(11, "determinism", [&] { return determinism(first, fresh(root / "synthetic_again")); });
  return failures == 0 ? 0 : 1;
}
