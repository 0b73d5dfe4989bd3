#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace epr {

/// R[l][i]: test accuracy on evaluation task i after training through task
/// l (both 0-based here). Rows are appended as training progresses; every
/// row covers all evaluation tasks, seen or not.
struct ResultMatrix {
  int n_tasks = 0;
  std::vector<std::vector<double>> rows;
  std::uint64_t seed = 0;
  std::string method;

  ResultMatrix() = default;
  explicit ResultMatrix(int tasks) : n_tasks(tasks) {}

  bool complete() const noexcept { return static_cast<int>(rows.size()) == n_tasks; }
  void add_row(std::vector<double> row);
  double at(int l, int i) const { return rows.at(static_cast<std::size_t>(l)).at(static_cast<std::size_t>(i)); }
};

/// Mean of the final row.
double acc_metric(const ResultMatrix& r);

/// Backward transfer: mean over i < T of -max_{i <= l < T} (R[l][i] - R[T][i]),
/// with 1-based indices. Requires T >= 2.
double bwt_metric(const ResultMatrix& r);

/// T rows of T comma-separated values, printed with 17 significant digits.
void write_result_csv(const ResultMatrix& r, const std::filesystem::path& file);
ResultMatrix read_result_csv(const std::filesystem::path& file);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for fewer than two values
  std::size_t n = 0;
};

MeanStd mean_std(const std::vector<double>& values);

}  // namespace epr
