#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "epr/synthetic.hpp"
#include "epr/task_stream.hpp"
#include "epr/tensor.hpp"

namespace testing {

inline epr::Tensor random_tensor(const epr::Shape& shape, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  epr::Tensor t(shape);
  std::uniform_real_distribution<float> d(lo, hi);
  for (float& v : t.values()) v = d(rng);
  return t;
}

inline epr::TaskStream small_stream(int n_tasks = 2, int cpt = 2, int per_class = 20, std::uint64_t seed = 0,
                                    int width = 16) {
  epr::SyntheticOptions o;
  o.n_classes = n_tasks * cpt;
  o.per_class_train = per_class;
  o.per_class_test = 5;
  o.width = width;
  o.seed = seed + 1;
  return epr::build_split_stream(epr::generate_synthetic_dataset(o), n_tasks, cpt, seed);
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("epr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
