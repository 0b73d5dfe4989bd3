#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "epr/experiment.hpp"
#include "epr/metrics.hpp"

namespace epr {

enum class ReportFormat { md, csv };

ReportFormat parse_report_format(const std::string& name);

/// Aggregate over the seeds of one (method, n_sc, EPF) configuration.
struct SummaryRow {
  std::string method;
  std::string n_sc;
  int epf = 0;
  std::size_t runs = 0;
  std::size_t failed = 0;
  MeanStd acc;
  MeanStd bwt;
  MeanStd informativeness;
  MeanStd train_seconds;
  MeanStd localization;
};

/// Groups runs in order of first appearance. Throws on an empty set.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs);

std::string render_report(const std::vector<SummaryRow>& rows, ReportFormat format);

/// Loads the run directories and renders their summary table.
std::string emit_report(const std::vector<std::filesystem::path>& run_dirs, ReportFormat format);

/// Inverse of the csv rendering (means and standard deviations only).
std::vector<SummaryRow> parse_summary_csv(const std::string& text);

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  double err = 0.0;
};

struct PlotSeries {
  std::string name;
  std::vector<PlotPoint> points;
};

struct BarEntry {
  std::string label;
  double value = 0.0;
  double err = 0.0;
};

struct PlotData {
  /// Mean ACC against n_sc, one series per memory-based method. With several
  /// EPF values the best one per n_sc is used.
  std::vector<PlotSeries> memory_sweep;
  /// Mean ACC against EPF, one series per patch method and n_sc.
  std::vector<PlotSeries> epf_sweep;
  std::vector<BarEntry> informativeness;
  std::vector<BarEntry> timing;
};

PlotData collect_plot_data(const std::vector<RunRecord>& runs);

/// Writes memory_sweep, epf_sweep, informativeness and timing figures as
/// SVG and PNG into `out_dir` (figures without data are skipped). Returns
/// the written paths. Throws on an empty run set.
std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& run_dirs,
                                              const std::filesystem::path& out_dir);

/// Tiles the images of a memory_snapshot directory (patches zero-padded to
/// their stored position when `full_size` > 0) into one PNG. Returns the
/// number of tiles.
int render_memory_sheet(const std::filesystem::path& snapshot_dir, const std::filesystem::path& png, int full_size);

}  // namespace epr
