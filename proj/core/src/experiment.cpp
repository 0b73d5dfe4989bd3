#include "epr/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "epr/cifar.hpp"
#include "epr/image_io.hpp"
#include "epr/report.hpp"
#include "epr/synthetic.hpp"

namespace epr {

using nlohmann::json;
namespace fs = std::filesystem;

json ExperimentConfig::to_json() const {
  return json{
      {"dataset", dataset},
      {"data_dir", data_dir},
      {"arch", arch},
      {"target_layer", target_layer},
      {"n_tasks", n_tasks},
      {"cv_tasks", cv_tasks},
      {"classes_per_task", classes_per_task},
      {"width", width},
      {"synthetic_train_per_class", synthetic_train_per_class},
      {"synthetic_test_per_class", synthetic_test_per_class},
      {"synthetic_noise", synthetic_noise},
      {"methods", methods},
      {"n_sc", n_sc},
      {"epf", epf},
      {"lr", lr},
      {"stride", stride},
      {"seeds", seeds},
      {"batch_size", batch_size},
      {"informativeness_epochs", informativeness_epochs},
      {"informativeness_lr", informativeness_lr},
      {"memory_snapshot", memory_snapshot},
      {"out", out},
  };
}

namespace {

// Accepts a scalar where a list is expected.
template <class T>
std::vector<T> as_list(const json& v) {
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

// n_sc values may be written as numbers or strings.
std::vector<std::string> as_ratio_list(const json& v) {
  std::vector<std::string> out;
  for (const json& e : v.is_array() ? v : json::array({v})) {
    out.push_back(e.is_string() ? e.get<std::string>() : SlotRatio::from_double(e.get<double>()).to_string());
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(file.string() + ": " + e.what());
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_double(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
  ExperimentConfig c;
  const json known = c.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("dataset", c.dataset);
    get("data_dir", c.data_dir);
    get("arch", c.arch);
    get("target_layer", c.target_layer);
    get("n_tasks", c.n_tasks);
    get("cv_tasks", c.cv_tasks);
    get("classes_per_task", c.classes_per_task);
    get("width", c.width);
    get("synthetic_train_per_class", c.synthetic_train_per_class);
    get("synthetic_test_per_class", c.synthetic_test_per_class);
    get("synthetic_noise", c.synthetic_noise);
    if (j.contains("methods")) c.methods = as_list<std::string>(j["methods"]);
    if (j.contains("n_sc")) c.n_sc = as_ratio_list(j["n_sc"]);
    if (j.contains("epf")) c.epf = as_list<int>(j["epf"]);
    if (j.contains("lr")) c.lr = as_list<double>(j["lr"]);
    if (j.contains("stride")) c.stride = as_list<int>(j["stride"]);
    if (j.contains("seeds")) c.seeds = as_list<std::uint64_t>(j["seeds"]);
    get("batch_size", c.batch_size);
    get("informativeness_epochs", c.informativeness_epochs);
    get("informativeness_lr", c.informativeness_lr);
    get("memory_snapshot", c.memory_snapshot);
    get("out", c.out);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& file) { return from_json(read_json(file)); }

void ExperimentConfig::validate() const {
  parse_dataset_source(dataset);
  parse_arch(arch);
  if (dataset == "cifar-dir" && data_dir.empty()) throw std::invalid_argument("cifar-dir needs data_dir");
  if (n_tasks < 1) throw std::invalid_argument("n_tasks must be at least 1");
  if (cv_tasks < 0) throw std::invalid_argument("cv_tasks must be non-negative");
  if (classes_per_task < 1) throw std::invalid_argument("classes_per_task must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (methods.empty() || n_sc.empty() || epf.empty() || lr.empty() || stride.empty() || seeds.empty()) {
    throw std::invalid_argument("methods, n_sc, epf, lr, stride and seeds must be non-empty");
  }
  for (const auto& m : methods) parse_method(m);
  for (const auto& v : n_sc) {
    if (!SlotRatio::parse(v).positive()) throw std::invalid_argument("n_sc must be positive");
  }
  for (int e : epf) {
    if (e < 1) throw std::invalid_argument("EPF must be at least 1");
  }
  for (int s : stride) {
    if (s < 1) throw std::invalid_argument("stride must be at least 1");
  }
  for (double v : lr) {
    if (!(v > 0.0)) throw std::invalid_argument("learning rates must be positive");
  }
  if ((lr.size() > 1 || stride.size() > 1) && cv_tasks == 0) {
    throw std::invalid_argument("searching lr or stride needs cv_tasks > 0");
  }
  if (informativeness_epochs < 0) throw std::invalid_argument("informativeness_epochs must be non-negative");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw std::invalid_argument("seeds must be distinct");
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  json j = cfg.to_json();
  const std::string k = [&] {
    std::string s = key;
    std::replace(s.begin(), s.end(), '-', '_');
    return s;
  }();
  if (!j.contains(k)) throw std::invalid_argument("unknown config key '" + key + "'");
  try {
    json& slot = j[k];
    if (k == "methods" || k == "n_sc") {
      slot = split_list(value);
    } else if (k == "lr") {
      json arr = json::array();
      for (const auto& s : split_list(value)) arr.push_back(std::stod(s));
      slot = arr;
    } else if (k == "epf" || k == "stride") {
      json arr = json::array();
      for (const auto& s : split_list(value)) arr.push_back(std::stoi(s));
      slot = arr;
    } else if (k == "seeds") {
      json arr = json::array();
      for (const auto& s : split_list(value)) arr.push_back(std::stoull(s));
      slot = arr;
    } else if (slot.is_boolean()) {
      if (value != "true" && value != "false") throw std::invalid_argument("expected true or false");
      slot = value == "true";
    } else if (slot.is_number_integer()) {
      slot = std::stoi(value);
    } else if (slot.is_number()) {
      slot = std::stod(value);
    } else {
      slot = value;
    }
  } catch (const std::logic_error& e) {
    throw std::invalid_argument("bad value '" + value + "' for " + key + ": " + e.what());
  }
  cfg = ExperimentConfig::from_json(j);
}

Dataset load_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (parse_dataset_source(cfg.dataset) == DatasetSource::cifar_dir) return load_cifar100_dir(cfg.data_dir);
  SyntheticOptions o;
  o.n_classes = (cfg.n_tasks + cfg.cv_tasks) * cfg.classes_per_task;
  o.per_class_train = cfg.synthetic_train_per_class;
  o.per_class_test = cfg.synthetic_test_per_class;
  o.width = cfg.width;
  o.background_noise = static_cast<float>(cfg.synthetic_noise);
  o.seed = seed + 1;
  return generate_synthetic_dataset(o);
}

ExperimentData make_experiment_data(const ExperimentConfig& cfg, Dataset dataset, std::uint64_t seed) {
  ExperimentData d;
  d.dataset = std::move(dataset);
  d.stream = build_split_stream(d.dataset, cfg.n_tasks + cfg.cv_tasks, cfg.classes_per_task, seed);
  if (cfg.cv_tasks > 0) {
    auto split = split_cross_validation(d.stream, cfg.cv_tasks);
    d.cv_tasks = std::move(split.cv_tasks);
    d.eval_tasks = std::move(split.train_eval_tasks);
  } else {
    d.eval_tasks = d.stream.tasks;
  }
  return d;
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  return make_experiment_data(cfg, load_dataset(cfg, seed), seed);
}

ModelConfig model_config_for(const ExperimentConfig& cfg, int n_tasks, int channels, int width,
                             std::uint64_t seed) {
  ModelConfig mc;
  mc.arch = parse_arch(cfg.arch);
  mc.n_tasks = n_tasks;
  mc.classes_per_task = cfg.classes_per_task;
  mc.channels = channels;
  mc.width = width;
  mc.target_layer = cfg.target_layer;
  mc.seed = seed;
  return mc;
}

CvResult cross_validate(const std::vector<MethodConfig>& grid, const std::vector<TaskDescriptor>& cv_tasks,
                        const ModelConfig& model_config) {
  if (grid.empty()) throw std::invalid_argument("cross-validation grid is empty");
  CvResult res;
  for (const MethodConfig& cfg : grid) {
    CvCandidate cand{cfg, 0.0, false};
    MultiHeadModel model(model_config);
    if (cfg.method == Method::multitask) {
      cand.acc = train_multitask(cv_tasks, model, cfg.lr, cfg.seed, cfg.batch_size).accuracy;
    } else {
      const RunResult run = train_continual(cv_tasks, model, cfg);
      cand.diverged = run.diverged;
      cand.acc = run.diverged ? 0.0 : acc_metric(run.matrix);
    }
    res.candidates.push_back(std::move(cand));
  }
  for (std::size_t i = 1; i < res.candidates.size(); ++i) {
    const CvCandidate& c = res.candidates[i];
    const CvCandidate& b = res.candidates[res.best];
    if (c.acc > b.acc || (c.acc == b.acc && c.config.lr < b.config.lr)) res.best = i;
  }
  return res;
}

std::string run_dir_name(const std::string& method, const std::string& n_sc, int epf, std::uint64_t seed) {
  return method + "_nsc-" + (n_sc.empty() ? "0" : n_sc) + "_epf-" + std::to_string(epf) + "_seed-" +
         std::to_string(seed);
}

namespace {

const char* const kStreamPurposes[] = {"init",  "order",     "replay", "placement",       "reservoir",
                                       "snip",  "synthetic", "class-order", "informativeness", "multitask-order"};

json rng_fingerprints(std::uint64_t seed) {
  json j = json::object();
  for (const char* p : kStreamPurposes) j[p] = stream_fingerprint(seed, p);
  return j;
}

void write_snapshot(const fs::path& dir, const RunResult& run) {
  fs::create_directories(dir);
  json manifest = json::array();
  int index = 0;
  char name[32];
  for (const MemoryPatch& p : run.memory.patches()) {
    std::snprintf(name, sizeof(name), "patch_%04d.png", index++);
    write_png(dir / name, tensor_to_rgb(p.pixels));
    manifest.push_back({{"file", name},
                        {"task", p.task_id},
                        {"class", p.label},
                        {"head_index", p.head_index},
                        {"x_cord", p.x},
                        {"y_cord", p.y},
                        {"W_p", p.width()},
                        {"tier", to_string(p.tier)},
                        {"source_id", p.source_id}});
  }
  for (const Example& e : run.buffer) {
    std::snprintf(name, sizeof(name), "item_%04d.png", index++);
    write_png(dir / name, tensor_to_rgb(*e.image));
    manifest.push_back({{"file", name},
                        {"task", e.task_id},
                        {"class", e.label},
                        {"head_index", e.head_index},
                        {"x_cord", 0},
                        {"y_cord", 0},
                        {"W_p", e.image->dim(1)},
                        {"tier", nullptr},
                        {"source_id", e.source_id}});
  }
  write_json(dir / "manifest.json", manifest);
}

}  // namespace

RunRecord execute_run(const ExperimentConfig& cfg, const ExperimentData& data, const MethodConfig& mcfg,
                      const fs::path& dir) {
  fs::create_directories(dir);
  const bool patches = is_patch_method(mcfg.method);
  const bool has_memory = mcfg.method != Method::finetune && mcfg.method != Method::multitask;

  RunRecord rec;
  rec.dir = dir;
  rec.method = to_string(mcfg.method);
  rec.n_sc = has_memory ? mcfg.n_sc.to_string() : "";
  rec.epf = patches ? mcfg.epf : 0;
  rec.seed = mcfg.seed;
  rec.lr = mcfg.lr;
  rec.stride = patches ? mcfg.stride : 0;

  json config = cfg.to_json();
  config["run"] = {{"method", rec.method}, {"lr", rec.lr},     {"n_sc", rec.n_sc},
                   {"epf", rec.epf},       {"stride", rec.stride}, {"seed", rec.seed},
                   {"batch_size", mcfg.batch_size}};
  write_json(dir / "config.json", config);

  const int n_eval = static_cast<int>(data.eval_tasks.size());
  const ModelConfig mc = model_config_for(cfg, n_eval, data.dataset.channels, data.dataset.width, mcfg.seed);
  MultiHeadModel model(mc);

  json metrics{{"method", rec.method}, {"seed", rec.seed},     {"lr", rec.lr},
               {"stride", rec.stride}, {"n_sc", rec.n_sc},     {"epf", rec.epf},
               {"arch", cfg.arch},     {"dataset", cfg.dataset}, {"n_tasks", n_eval}};
  json timing;

  if (mcfg.method == Method::multitask) {
    const MultitaskResult mt = train_multitask(data.eval_tasks, model, mcfg.lr, mcfg.seed, mcfg.batch_size);
    rec.ok = true;
    rec.acc = mt.accuracy;
    rec.final_accuracy = mt.task_accuracy;
    rec.train_seconds = mt.train_seconds;
    timing = {{"per_task_seconds", json::array()}, {"total_seconds", mt.train_seconds}};
  } else {
    const RunResult run = train_continual(data.eval_tasks, model, mcfg);
    write_result_csv(run.matrix, dir / "result_matrix.csv");
    rec.ok = !run.diverged;
    rec.error = run.error;
    rec.memory_slots = run.memory_slots;
    rec.patch_width = run.patch_width;
    rec.train_seconds = std::accumulate(run.train_seconds.begin(), run.train_seconds.end(), 0.0);
    if (run.matrix.complete()) {
      rec.acc = acc_metric(run.matrix);
      if (n_eval >= 2) rec.bwt = bwt_metric(run.matrix);
      rec.final_accuracy = run.matrix.rows.back();
    }
    timing = {{"per_task_seconds", run.train_seconds}, {"total_seconds", rec.train_seconds}};

    if (patches && !data.dataset.train.boxes.empty() && !run.memory.empty()) {
      int hits = 0;
      for (const MemoryPatch& p : run.memory.patches()) {
        const Box b{p.x, p.y, p.width(), p.width()};
        if (intersection_over_union(b, data.dataset.train.boxes.at(static_cast<std::size_t>(p.source_id))) >= 0.25) {
          ++hits;
        }
      }
      rec.localization = static_cast<double>(hits) / static_cast<double>(run.memory.size());
      metrics["localization"] = {{"patches", run.memory.size()}, {"iou_at_least_0.25", hits},
                                 {"fraction", *rec.localization}};
    }

    if (cfg.informativeness_epochs > 0 && rec.ok && has_memory) {
      const std::vector<Example> buffer = patches ? replay_set(run.memory, mc.width) : run.buffer;
      if (!buffer.empty()) {
        ModelConfig fresh_cfg = mc;
        fresh_cfg.seed = stream_seed(mcfg.seed, "probe-model");
        MultiHeadModel fresh(fresh_cfg);
        rec.informativeness = buffer_informativeness(buffer, fresh, data.eval_tasks, cfg.informativeness_epochs,
                                                     cfg.informativeness_lr, mcfg.seed, mcfg.batch_size);
      }
    }

    json tiers = json::array();
    for (const auto& u : run.memory_updates) {
      tiers.push_back({{"patches_added", u.patches_added},
                       {"correct", u.tier_counts[0]},
                       {"top3", u.tier_counts[1]},
                       {"other", u.tier_counts[2]},
                       {"empty_classes", u.empty_classes}});
    }
    metrics["memory_updates"] = tiers;
    metrics["memory_slots"] = run.memory_slots;
    metrics["patch_width"] = run.patch_width;
    metrics["diverged"] = run.diverged;
    if (cfg.memory_snapshot && has_memory) write_snapshot(dir / "memory_snapshot", run);
  }

  metrics["ACC"] = optional_json(rec.acc);
  metrics["BWT"] = optional_json(rec.bwt);
  metrics["final_accuracy"] = rec.final_accuracy;
  metrics["informativeness"] = optional_json(rec.informativeness);
  metrics["train_seconds"] = rec.train_seconds;
  metrics["ok"] = rec.ok;
  metrics["error"] = rec.error;
  metrics["rng_fingerprints"] = rng_fingerprints(mcfg.seed);
  rec.metrics = metrics;
  write_json(dir / "metrics.json", metrics);
  write_json(dir / "timing.json", timing);
  return rec;
}

RunRecord load_run_record(const fs::path& dir) {
  const json m = read_json(dir / "metrics.json");
  RunRecord r;
  r.dir = dir;
  r.metrics = m;
  r.method = m.at("method").get<std::string>();
  r.seed = m.at("seed").get<std::uint64_t>();
  r.lr = m.value("lr", 0.0);
  r.stride = m.value("stride", 0);
  r.n_sc = m.value("n_sc", std::string());
  r.epf = m.value("epf", 0);
  r.ok = m.value("ok", false);
  r.error = m.value("error", std::string());
  r.acc = optional_double(m, "ACC");
  r.bwt = optional_double(m, "BWT");
  r.informativeness = optional_double(m, "informativeness");
  r.train_seconds = m.value("train_seconds", 0.0);
  r.memory_slots = m.value("memory_slots", 0L);
  r.patch_width = m.value("patch_width", 0);
  if (m.contains("final_accuracy")) r.final_accuracy = m["final_accuracy"].get<std::vector<double>>();
  if (m.contains("localization")) r.localization = m["localization"].at("fraction").get<double>();

  // Metrics are recomputed from the persisted matrix when one exists.
  if (fs::exists(dir / "result_matrix.csv")) {
    const ResultMatrix rm = read_result_csv(dir / "result_matrix.csv");
    if (rm.complete()) {
      r.acc = acc_metric(rm);
      r.bwt = rm.n_tasks >= 2 ? std::optional<double>(bwt_metric(rm)) : std::nullopt;
    }
  }
  return r;
}

std::vector<fs::path> find_run_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) throw std::runtime_error(root.string() + " is not a directory");
  std::vector<fs::path> dirs;
  if (fs::exists(root / "metrics.json")) dirs.push_back(root);
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "metrics.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, bool verbose) {
  cfg.validate();
  const fs::path out(cfg.out);
  fs::create_directories(out);
  write_json(out / "experiment.json", cfg.to_json());

  // Datasets are built once per seed and shared by every method.
  std::vector<ExperimentData> data;
  std::optional<Dataset> shared;
  if (parse_dataset_source(cfg.dataset) == DatasetSource::cifar_dir) shared = load_dataset(cfg, 0);
  for (std::uint64_t seed : cfg.seeds) {
    data.push_back(make_experiment_data(cfg, shared ? *shared : load_dataset(cfg, seed), seed));
  }

  ExperimentSummary summary;
  json cv_log = json::array();
  for (const auto& method_name : cfg.methods) {
    const Method method = parse_method(method_name);
    const bool patches = is_patch_method(method);
    const bool has_memory = method != Method::finetune && method != Method::multitask;
    const std::vector<std::string> nscs = has_memory ? cfg.n_sc : std::vector<std::string>{"1"};
    const std::vector<int> epfs = patches ? cfg.epf : std::vector<int>{cfg.epf.front()};
    const bool uses_stride = patches && method != Method::random_snip;
    const std::vector<int> strides = uses_stride ? cfg.stride : std::vector<int>{cfg.stride.front()};

    for (const auto& nsc : nscs) {
      for (int epf : epfs) {
        MethodConfig base;
        base.method = method;
        base.n_sc = SlotRatio::parse(nsc);
        base.epf = epf;
        base.batch_size = cfg.batch_size;
        base.lr = cfg.lr.front();
        base.stride = strides.front();
        base.seed = cfg.seeds.front();

        if (cfg.lr.size() > 1 || strides.size() > 1) {
          std::vector<MethodConfig> grid;
          for (double lr : cfg.lr) {
            for (int s : strides) {
              MethodConfig g = base;
              g.lr = lr;
              g.stride = s;
              grid.push_back(g);
            }
          }
          const ExperimentData& d0 = data.front();
          const ModelConfig mc = model_config_for(cfg, static_cast<int>(d0.cv_tasks.size()), d0.dataset.channels,
                                                  d0.dataset.width, base.seed);
          const CvResult cv = cross_validate(grid, d0.cv_tasks, mc);
          base.lr = cv.best_config().lr;
          base.stride = cv.best_config().stride;
          json entry{{"method", method_name}, {"n_sc", has_memory ? nsc : ""}, {"epf", patches ? epf : 0},
                     {"selected_lr", base.lr}, {"selected_stride", base.stride}, {"candidates", json::array()}};
          for (const auto& c : cv.candidates) {
            entry["candidates"].push_back(
                {{"lr", c.config.lr}, {"stride", c.config.stride}, {"ACC", c.acc}, {"diverged", c.diverged}});
          }
          cv_log.push_back(entry);
          if (verbose) {
            std::cerr << "cv " << method_name << " n_sc=" << nsc << " epf=" << epf << " -> lr " << base.lr
                      << " stride " << base.stride << '\n';
          }
        }

        for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
          MethodConfig run_cfg = base;
          run_cfg.seed = cfg.seeds[i];
          const fs::path dir =
              out / run_dir_name(method_name, has_memory ? nsc : "", patches ? epf : 0, run_cfg.seed);
          RunRecord rec;
          try {
            rec = execute_run(cfg, data[i], run_cfg, dir);
          } catch (const std::exception& e) {
            rec.dir = dir;
            rec.method = method_name;
            rec.n_sc = has_memory ? nsc : "";
            rec.epf = patches ? epf : 0;
            rec.seed = run_cfg.seed;
            rec.lr = run_cfg.lr;
            rec.ok = false;
            rec.error = e.what();
            fs::create_directories(dir);
            write_json(dir / "metrics.json", {{"method", rec.method}, {"seed", rec.seed}, {"n_sc", rec.n_sc},
                                              {"epf", rec.epf}, {"lr", rec.lr}, {"ok", false},
                                              {"error", rec.error}, {"ACC", nullptr}, {"BWT", nullptr}});
          }
          if (verbose) {
            std::cerr << dir.filename().string() << ": ";
            if (rec.acc) {
              std::cerr << "ACC " << *rec.acc;
            } else {
              std::cerr << "failed (" << rec.error << ")";
            }
            std::cerr << '\n';
          }
          summary.runs.push_back(std::move(rec));
        }
      }
    }
  }
  if (!cv_log.empty()) write_json(out / "cv.json", cv_log);

  const auto rows = summarize(summary.runs);
  summary.summary_md = out / "summary.md";
  summary.summary_csv = out / "summary.csv";
  std::ofstream(summary.summary_md) << render_report(rows, ReportFormat::md);
  std::ofstream(summary.summary_csv) << render_report(rows, ReportFormat::csv);
  return summary;
}

}  // namespace epr
