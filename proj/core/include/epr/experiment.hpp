#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epr/dataset.hpp"
#include "epr/model.hpp"
#include "epr/task_stream.hpp"
#include "epr/trainer.hpp"

namespace epr {

/// Flat experiment description. Every key can be set from a JSON file and
/// overridden from the command line; the resolved values are written next
/// to each run.
struct ExperimentConfig {
  std::string dataset = "synthetic";  // "synthetic" or "cifar-dir"
  std::string data_dir;
  std::string arch = "small-cnn";
  std::string target_layer;
  int n_tasks = 4;  // training-evaluation tasks
  int cv_tasks = 0;  // extra leading tasks reserved for hyperparameter search
  int classes_per_task = 2;
  int width = 32;  // synthetic only
  int synthetic_train_per_class = 250;
  int synthetic_test_per_class = 50;
  double synthetic_noise = 0.5;

  std::vector<std::string> methods{"epr"};
  std::vector<std::string> n_sc{"1"};
  std::vector<int> epf{2};
  /// Candidates searched on the cross-validation tasks when more than one.
  std::vector<double> lr{0.1};
  std::vector<int> stride{1};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int batch_size = 10;

  int informativeness_epochs = 0;  // 0 skips the probe
  double informativeness_lr = 0.1;
  bool memory_snapshot = true;
  std::string out = "runs";

  nlohmann::json to_json() const;
  /// Unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& file);
  void validate() const;
};

/// Sets one key from its command-line spelling; lists are comma-separated.
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Dataset plus the split stream built from it for one seed.
struct ExperimentData {
  Dataset dataset;
  TaskStream stream;
  std::vector<TaskDescriptor> cv_tasks;
  std::vector<TaskDescriptor> eval_tasks;
};

/// Synthetic data is regenerated per seed; a CIFAR directory is read as is.
Dataset load_dataset(const ExperimentConfig& cfg, std::uint64_t seed);
ExperimentData make_experiment_data(const ExperimentConfig& cfg, Dataset dataset, std::uint64_t seed);
ExperimentData load_experiment_data(const ExperimentConfig& cfg, std::uint64_t seed);

ModelConfig model_config_for(const ExperimentConfig& cfg, int n_tasks, int channels, int width,
                             std::uint64_t seed);

struct CvCandidate {
  MethodConfig config;
  double acc = 0.0;
  bool diverged = false;
};

struct CvResult {
  std::size_t best = 0;
  std::vector<CvCandidate> candidates;
  const MethodConfig& best_config() const { return candidates.at(best).config; }
};

/// Runs every grid entry on the cross-validation tasks with a fresh model
/// and keeps the highest ACC. Ties go to the lowest lr, then to the earlier
/// entry. Divergent entries score 0.
CvResult cross_validate(const std::vector<MethodConfig>& grid, const std::vector<TaskDescriptor>& cv_tasks,
                        const ModelConfig& model_config);

/// Persisted outcome of one (method, n_sc, EPF, seed) run.
struct RunRecord {
  std::filesystem::path dir;
  std::string method;
  std::string n_sc;  // empty when the method keeps no memory
  int epf = 0;       // 0 for methods without packing
  std::uint64_t seed = 0;
  double lr = 0.0;
  int stride = 0;
  bool ok = false;
  std::string error;
  std::optional<double> acc;
  std::optional<double> bwt;
  std::vector<double> final_accuracy;
  double train_seconds = 0.0;
  std::optional<double> informativeness;
  std::optional<double> localization;  // fraction of patches with IoU >= 0.25
  long memory_slots = 0;
  int patch_width = 0;
  nlohmann::json metrics;
};

std::string run_dir_name(const std::string& method, const std::string& n_sc, int epf, std::uint64_t seed);

/// Reads metrics.json (and result_matrix.csv when present) from a run
/// directory.
RunRecord load_run_record(const std::filesystem::path& dir);

/// Run directories below `root` in name order.
std::vector<std::filesystem::path> find_run_dirs(const std::filesystem::path& root);

struct ExperimentSummary {
  std::vector<RunRecord> runs;
  std::filesystem::path summary_md;
  std::filesystem::path summary_csv;
};

/// Executes every method x n_sc x EPF x seed combination, writes one run
/// directory each plus summary.md/summary.csv under cfg.out. Failed runs
/// are recorded and shown as gaps in the summary.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, bool verbose = false);

/// Trains one configuration on `data` and writes its run directory.
RunRecord execute_run(const ExperimentConfig& cfg, const ExperimentData& data, const MethodConfig& method,
                      const std::filesystem::path& dir);

}  // namespace epr
