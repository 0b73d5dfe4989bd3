#include "epr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace epr {

void ResultMatrix::add_row(std::vector<double> row) {
  if (static_cast<int>(row.size()) != n_tasks) throw std::invalid_argument("result row must cover every task");
  if (complete()) throw std::logic_error("result matrix already has all rows");
  for (double v : row) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("accuracy outside [0, 1]");
  }
  rows.push_back(std::move(row));
}

double acc_metric(const ResultMatrix& r) {
  if (!r.complete() || r.n_tasks < 1) throw std::invalid_argument("ACC needs a complete result matrix");
  const auto& last = r.rows.back();
  double s = 0.0;
  for (double v : last) s += v;
  return s / static_cast<double>(last.size());
}

double bwt_metric(const ResultMatrix& r) {
  if (r.n_tasks < 2) throw std::invalid_argument("BWT needs at least two tasks");
  if (!r.complete()) throw std::invalid_argument("BWT needs a complete result matrix");
  const int t = r.n_tasks;
  double total = 0.0;
  for (int i = 0; i < t - 1; ++i) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int l = i; l < t - 1; ++l) worst = std::max(worst, r.at(l, i) - r.at(t - 1, i));
    total += -worst;
  }
  return total / static_cast<double>(t - 1);
}

void write_result_csv(const ResultMatrix& r, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  char buf[32];
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      out << (i ? "," : "") << buf;
    }
    out << '\n';
  }
}

ResultMatrix read_result_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(file.string() + " holds no rows");
  ResultMatrix r(static_cast<int>(rows.front().size()));
  for (auto& row : rows) r.add_row(std::move(row));
  return r;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd m;
  m.n = values.size();
  if (values.empty()) return m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

}  // namespace epr
