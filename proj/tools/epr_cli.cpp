#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "epr/experiment.hpp"
#include "epr/image_io.hpp"
#include "epr/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  bool verbose = false;
};

// Flags that map one-to-one onto experiment config keys.
const std::vector<std::pair<std::string, std::string>> kConfigFlags = {
    {"dataset", "synthetic or cifar-dir"},
    {"data-dir", "CIFAR-100 binary directory"},
    {"arch", "small-cnn or reduced-resnet18"},
    {"target-layer", "saliency target layer"},
    {"method", "comma-separated methods"},
    {"n-sc", "comma-separated memory slots per class"},
    {"epf", "comma-separated packing factors"},
    {"stride", "comma-separated pooling strides"},
    {"lr", "comma-separated learning rates"},
    {"seeds", "comma-separated seeds"},
    {"batch-size", "current and replay batch size"},
    {"n-tasks", "training-evaluation tasks"},
    {"cv-tasks", "cross-validation tasks"},
    {"classes-per-task", "classes per task"},
    {"informativeness-epochs", "buffer probe epochs (0 skips)"},
    {"out", "output directory"},
};

void add_config_flags(CLI::App* app, ConfigFlags& flags) {
  app->add_option("--config", flags.config_file, "JSON experiment config")->check(CLI::ExistingFile);
  for (const auto& [name, help] : kConfigFlags) app->add_option("--" + name, flags.values[name], help);
  app->add_flag("-v,--verbose", flags.verbose, "progress on stderr");
}

epr::ExperimentConfig resolve(const ConfigFlags& flags) {
  epr::ExperimentConfig cfg = flags.config_file.empty() ? epr::ExperimentConfig{}
                                                        : epr::ExperimentConfig::load(flags.config_file);
  for (const auto& [name, value] : flags.values) {
    if (value.empty()) continue;
    epr::apply_override(cfg, name == "method" ? "methods" : name, value);
  }
  cfg.validate();
  return cfg;
}

std::vector<fs::path> collect_runs(const std::vector<std::string>& roots) {
  std::vector<fs::path> dirs;
  for (const auto& r : roots) {
    const auto found = epr::find_run_dirs(r);
    dirs.insert(dirs.end(), found.begin(), found.end());
  }
  if (dirs.empty()) throw std::runtime_error("no run directories found");
  return dirs;
}

int cmd_cv(const epr::ExperimentConfig& cfg, bool verbose) {
  if (cfg.cv_tasks < 1) throw std::invalid_argument("cv needs --cv-tasks >= 1");
  const auto data = epr::load_experiment_data(cfg, cfg.seeds.front());
  json log = json::array();
  for (const auto& name : cfg.methods) {
    const epr::Method method = epr::parse_method(name);
    std::vector<epr::MethodConfig> grid;
    for (double lr : cfg.lr) {
      for (int s : cfg.stride) {
        epr::MethodConfig m;
        m.method = method;
        m.lr = lr;
        m.stride = s;
        m.n_sc = epr::SlotRatio::parse(cfg.n_sc.front());
        m.epf = cfg.epf.front();
        m.batch_size = cfg.batch_size;
        m.seed = cfg.seeds.front();
        grid.push_back(m);
      }
    }
    const auto mc = epr::model_config_for(cfg, static_cast<int>(data.cv_tasks.size()), data.dataset.channels,
                                          data.dataset.width, cfg.seeds.front());
    const epr::CvResult res = epr::cross_validate(grid, data.cv_tasks, mc);
    json entry{{"method", name}, {"selected_lr", res.best_config().lr},
               {"selected_stride", res.best_config().stride}, {"candidates", json::array()}};
    for (const auto& c : res.candidates) {
      entry["candidates"].push_back(
          {{"lr", c.config.lr}, {"stride", c.config.stride}, {"ACC", c.acc}, {"diverged", c.diverged}});
      if (verbose) {
        std::cerr << name << " lr=" << c.config.lr << " stride=" << c.config.stride << " ACC=" << c.acc
                  << (c.diverged ? " (diverged)" : "") << '\n';
      }
    }
    std::cout << name << ": lr " << res.best_config().lr << ", stride " << res.best_config().stride << '\n';
    log.push_back(entry);
  }
  fs::create_directories(cfg.out);
  std::ofstream(fs::path(cfg.out) / "cv.json") << log.dump(2) << '\n';
  return 0;
}

int cmd_export(const epr::ExperimentConfig& cfg, const std::string& out, std::uint64_t seed) {
  if (epr::parse_dataset_source(cfg.dataset) != epr::DatasetSource::synthetic) {
    throw std::invalid_argument("export-dataset only writes the synthetic set");
  }
  const auto data = epr::load_experiment_data(cfg, seed);
  std::map<int, int> task_of;
  for (const auto& t : data.stream.tasks) {
    for (int label : t.label_set) task_of[label] = t.task_id;
  }
  json manifest = json::array();
  for (const auto* split : {&data.dataset.train, &data.dataset.test}) {
    const std::string name = split == &data.dataset.train ? "train" : "test";
    fs::create_directories(fs::path(out) / name);
    for (std::size_t i = 0; i < split->size(); ++i) {
      const std::string file = name + "/" + std::to_string(i) + ".png";
      epr::write_png(fs::path(out) / file, epr::tensor_to_rgb(*split->images[i]));
      const epr::Box& b = split->boxes[i];
      manifest.push_back({{"image", file},
                          {"split", name},
                          {"label", split->labels[i]},
                          {"task", task_of.at(split->labels[i])},
                          {"box", {b.x, b.y, b.w, b.h}}});
    }
  }
  std::ofstream(fs::path(out) / "manifest.json") << manifest.dump(1) << '\n';
  std::cout << "wrote " << manifest.size() << " images to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experience packing and replay: continual-learning experiments"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "train every method x n_sc x EPF x seed and summarize");
  add_config_flags(run, run_flags);

  ConfigFlags cv_flags;
  auto* cv = app.add_subcommand("cv", "grid-search lr and stride on the cross-validation tasks");
  add_config_flags(cv, cv_flags);

  std::vector<std::string> report_roots;
  std::string report_format = "md", report_output;
  auto* report = app.add_subcommand("report", "summary table from run directories");
  report->add_option("runs", report_roots, "run directories or experiment roots")->required();
  report->add_option("--format", report_format, "md or csv");
  report->add_option("--output", report_output, "write to a file instead of stdout");

  std::vector<std::string> plot_roots;
  std::string plot_out = "plots";
  auto* plot = app.add_subcommand("plot", "memory-size, EPF, informativeness and timing figures");
  plot->add_option("runs", plot_roots, "run directories or experiment roots")->required();
  plot->add_option("--out", plot_out, "figure directory");

  std::string inspect_dir, inspect_out;
  bool inspect_full = false;
  auto* inspect = app.add_subcommand("inspect-memory", "render a run's memory snapshot as one image");
  inspect->add_option("run", inspect_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  inspect->add_option("--out", inspect_out, "output PNG (default <run>/memory.png)");
  inspect->add_flag("--full-size", inspect_full, "zero-pad patches to their stored positions");

  ConfigFlags export_flags;
  std::uint64_t export_seed = 1;
  auto* exporter = app.add_subcommand("export-dataset", "write the synthetic set as PNG files plus a manifest");
  add_config_flags(exporter, export_flags);
  exporter->add_option("--seed", export_seed, "seed selecting data and task split");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = resolve(run_flags);
      const auto summary = epr::run_experiment(cfg, run_flags.verbose);
      std::ifstream in(summary.summary_md);
      std::cout << in.rdbuf();
      std::size_t failed = 0;
      for (const auto& r : summary.runs) failed += r.ok ? 0 : 1;
      return failed == 0 ? 0 : 3;
    }
    if (*cv) return cmd_cv(resolve(cv_flags), cv_flags.verbose);
    if (*report) {
      const std::string text = epr::emit_report(collect_runs(report_roots), epr::parse_report_format(report_format));
      if (report_output.empty()) {
        std::cout << text;
      } else {
        std::ofstream(report_output) << text;
      }
      return 0;
    }
    if (*plot) {
      for (const auto& p : epr::emit_plots(collect_runs(plot_roots), plot_out)) std::cout << p.string() << '\n';
      return 0;
    }
    if (*inspect) {
      const fs::path dir(inspect_dir);
      const fs::path out = inspect_out.empty() ? dir / "memory.png" : fs::path(inspect_out);
      int full = 0;
      if (inspect_full) {
        const json cfg = json::parse(std::ifstream(dir / "config.json"));
        full = cfg.value("width", 32);
        if (cfg.value("dataset", std::string("synthetic")) == "cifar-dir") full = 32;
      }
      const int n = epr::render_memory_sheet(dir / "memory_snapshot", out, full);
      std::cout << n << " entries -> " << out.string() << '\n';
      return 0;
    }
    if (*exporter) {
      auto cfg = resolve(export_flags);
      return cmd_export(cfg, cfg.out, export_seed);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
