#include "epr/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

namespace epr {

using json = nlohmann::json;

Arch parse_arch(const std::string& name) {
  if (name == "small-cnn") return Arch::small_cnn;
  if (name == "reduced-resnet18") return Arch::reduced_resnet18;
  throw std::invalid_argument("unsupported architecture '" + name + "' (expected small-cnn or reduced-resnet18)");
}

std::string to_string(Arch arch) {
  switch (arch) {
    case Arch::small_cnn:
      return "small-cnn";
    case Arch::reduced_resnet18:
      return "reduced-resnet18";
  }
  return "unknown";
}

MultiHeadModel::MultiHeadModel(ModelConfig config) : config_(std::move(config)) { build(); }

MultiHeadModel::~MultiHeadModel() = default;

MultiHeadModel::MultiHeadModel(const MultiHeadModel& other)
    : config_(other.config_),
      target_name_(other.target_name_),
      stage_names_(other.stage_names_),
      target_index_(other.target_index_),
      pool_(other.pool_),
      heads_(other.heads_),
      feature_dim_(other.feature_dim_) {
  stages_.reserve(other.stages_.size());
  for (const auto& s : other.stages_) stages_.push_back(s->clone());
}

MultiHeadModel& MultiHeadModel::operator=(const MultiHeadModel& other) {
  if (this != &other) {
    MultiHeadModel tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

void MultiHeadModel::build() {
  if (config_.n_tasks < 1) throw std::invalid_argument("model needs at least one task head");
  if (config_.classes_per_task < 1) throw std::invalid_argument("heads need at least one class");
  if (config_.channels < 1) throw std::invalid_argument("input channel count must be positive");

  Rng rng = make_stream(config_.seed, "init");
  std::string default_target;
  switch (config_.arch) {
    case Arch::small_cnn: {
      if (config_.width < 4) throw std::invalid_argument("small-cnn needs images at least 4 pixels wide");
      const int widths[] = {16, 32, 64};
      int in = config_.channels;
      for (int b = 0; b < 3; ++b) {
        auto block = std::make_unique<Sequential>();
        block->add("conv", std::make_unique<Conv2d>(in, widths[b], 3, 1, 1, true, rng));
        block->add("relu", std::make_unique<ReLU>());
        if (b < 2) block->add("pool", std::make_unique<MaxPool2d>(2));
        stage_names_.push_back("block" + std::to_string(b + 1));
        stages_.push_back(std::move(block));
        in = widths[b];
      }
      feature_dim_ = in;
      default_target = "block3";
      break;
    }
    case Arch::reduced_resnet18: {
      if (config_.width < 8) throw std::invalid_argument("reduced-resnet18 needs images at least 8 pixels wide");
      constexpr int nf = 20;
      auto stem = std::make_unique<Sequential>();
      stem->add("conv", std::make_unique<Conv2d>(config_.channels, nf, 3, 1, 1, false, rng));
      stem->add("bn", std::make_unique<BatchNorm2d>(nf));
      stem->add("relu", std::make_unique<ReLU>());
      stage_names_.push_back("conv1");
      stages_.push_back(std::move(stem));
      int in = nf;
      const int planes[] = {nf, 2 * nf, 4 * nf, 8 * nf};
      const int strides[] = {1, 2, 2, 2};
      for (int l = 0; l < 4; ++l) {
        for (int b = 0; b < 2; ++b) {
          const int stride = b == 0 ? strides[l] : 1;
          stages_.push_back(std::make_unique<BasicBlock>(in, planes[l], stride, rng));
          stage_names_.push_back("layer" + std::to_string(l + 1) + "." + std::to_string(b));
          in = planes[l];
        }
      }
      feature_dim_ = in;
      default_target = "layer4.1";
      break;
    }
  }

  heads_.reserve(static_cast<std::size_t>(config_.n_tasks));
  for (int t = 0; t < config_.n_tasks; ++t) heads_.emplace_back(feature_dim_, config_.classes_per_task, rng);

  // Resolve the target stage name.
  target_name_ = config_.target_layer.empty() ? default_target : config_.target_layer;
  std::string name = target_name_;
  bool input_of_stage = false;
  const std::string suffix = ".shortcut";
  if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
    name.resize(name.size() - suffix.size());
    input_of_stage = true;
  }
  // A group name ("layer3") matches its blocks: the output is the last one,
  // the input is whatever feeds the first one.
  std::ptrdiff_t first = -1, last = -1;
  for (std::size_t i = 0; i < stage_names_.size(); ++i) {
    if (stage_names_[i] == name || stage_names_[i].rfind(name + ".", 0) == 0) {
      if (first < 0) first = static_cast<std::ptrdiff_t>(i);
      last = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (last < 0 || (input_of_stage && first == 0)) {
    throw std::invalid_argument("unknown target layer '" + target_name_ + "' for " + to_string(config_.arch));
  }
  target_index_ = static_cast<std::size_t>(input_of_stage ? first - 1 : last);
}

Shape MultiHeadModel::target_shape() const {
  Shape s{config_.channels, config_.width, config_.width};
  for (std::size_t i = 0; i <= target_index_; ++i) s = stages_[i]->output_shape(s);
  return s;
}

void MultiHeadModel::check_task(int task_id) const {
  if (task_id < 1 || task_id > config_.n_tasks) {
    throw std::out_of_range("task id " + std::to_string(task_id) + " has no head (model has " +
                            std::to_string(config_.n_tasks) + ")");
  }
}

Linear& MultiHeadModel::head(int task_id) {
  check_task(task_id);
  return heads_[static_cast<std::size_t>(task_id - 1)];
}

Tensor MultiHeadModel::run_backbone(const Tensor& x, bool training, std::size_t stop) {
  Tensor h = x;
  for (std::size_t i = 0; i < stop; ++i) h = stages_[i]->forward(h, training);
  return h;
}

Tensor MultiHeadModel::forward(const Tensor& images, int task_id) {
  check_task(task_id);
  if (images.rank() != 4) throw std::invalid_argument("forward expects an (N, C, H, W) batch");
  std::vector<int> ids(static_cast<std::size_t>(images.dim(0)), task_id);
  return forward(images, ids, false);
}

Tensor MultiHeadModel::forward(const Tensor& images, std::span<const int> task_ids, bool training) {
  const Shape expected{config_.channels, config_.width, config_.width};
  if (images.rank() != 4 || Shape(images.shape().begin() + 1, images.shape().end()) != expected) {
    throw std::invalid_argument("image batch " + shape_string(images.shape()) + " does not match model input " +
                                shape_string(expected));
  }
  const int n = images.dim(0);
  if (static_cast<int>(task_ids.size()) != n) throw std::invalid_argument("one task id per image required");
  for (int t : task_ids) check_task(t);

  const Tensor features = pool_.forward(run_backbone(images, training, stages_.size()), training);
  const int cpt = config_.classes_per_task;
  Tensor scores({n, cpt});
  std::map<int, std::vector<int>> rows_of;
  for (int i = 0; i < n; ++i) rows_of[task_ids[static_cast<std::size_t>(i)]].push_back(i);
  for (const auto& [task, rows] : rows_of) {
    Tensor sub({static_cast<int>(rows.size()), feature_dim_});
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy_n(features.item(rows[r]).data(), feature_dim_, sub.item(static_cast<int>(r)).data());
    }
    const Tensor out = heads_[static_cast<std::size_t>(task - 1)].forward(sub, training);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy_n(out.item(static_cast<int>(r)).data(), cpt, scores.item(rows[r]).data());
    }
  }
  return scores;
}

void MultiHeadModel::zero_grad() {
  for (Parameter* p : parameters()) p->grad.fill(0.0f);
}

double MultiHeadModel::sgd_step(std::span<const Example> batch, double lr) {
  if (batch.empty()) throw std::invalid_argument("sgd_step needs a non-empty batch");
  if (!(lr >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
  const int n = static_cast<int>(batch.size());
  const int cpt = config_.classes_per_task;

  std::vector<Tensor> images;
  images.reserve(batch.size());
  for (const Example& ex : batch) {
    check_task(ex.task_id);
    if (ex.head_index < 0 || ex.head_index >= cpt) throw std::out_of_range("example head index out of range");
    images.push_back(*ex.image);
  }
  const Tensor x = stack(images);

  zero_grad();
  const Tensor features = pool_.forward(run_backbone(x, true, stages_.size()), true);
  Tensor grad_features({n, feature_dim_});

  std::map<int, std::vector<int>> rows_of;
  for (int i = 0; i < n; ++i) rows_of[batch[static_cast<std::size_t>(i)].task_id].push_back(i);

  double loss = 0.0;
  std::vector<std::pair<int, Tensor>> head_grads;
  for (const auto& [task, rows] : rows_of) {
    const int m = static_cast<int>(rows.size());
    Tensor sub({m, feature_dim_});
    for (int r = 0; r < m; ++r) std::copy_n(features.item(rows[static_cast<std::size_t>(r)]).data(), feature_dim_, sub.item(r).data());
    Linear& h = heads_[static_cast<std::size_t>(task - 1)];
    const Tensor logits = h.forward(sub, true);
    Tensor grad_logits({m, cpt});
    for (int r = 0; r < m; ++r) {
      const float* z = logits.item(r).data();
      const float zmax = *std::max_element(z, z + cpt);
      double denom = 0.0;
      for (int k = 0; k < cpt; ++k) denom += std::exp(static_cast<double>(z[k] - zmax));
      const int target = batch[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])].head_index;
      loss += -(static_cast<double>(z[target] - zmax) - std::log(denom));
      for (int k = 0; k < cpt; ++k) {
        const double p = std::exp(static_cast<double>(z[k] - zmax)) / denom;
        grad_logits.item(r)[static_cast<std::size_t>(k)] = static_cast<float>((p - (k == target ? 1.0 : 0.0)) / n);
      }
    }
    const Tensor gsub = h.backward(grad_logits);
    for (int r = 0; r < m; ++r) std::copy_n(gsub.item(r).data(), feature_dim_, grad_features.item(rows[static_cast<std::size_t>(r)]).data());
  }
  loss /= n;
  if (!std::isfinite(loss)) {
    zero_grad();
    throw DivergenceError("non-finite training loss (" + std::to_string(loss) + ") at learning rate " +
                          std::to_string(lr));
  }

  Tensor g = pool_.backward(grad_features);
  for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) g = (*it)->backward(g);

  const float step = static_cast<float>(lr);
  for (Parameter* p : parameters()) {
    if (!p->grad.all_finite()) {
      zero_grad();
      throw DivergenceError("non-finite gradient in " + p->name);
    }
    float* v = p->value.data();
    const float* gr = p->grad.data();
    for (std::size_t i = 0; i < p->value.size(); ++i) v[i] -= step * gr[i];
  }
  zero_grad();
  return loss;
}

TargetCapture MultiHeadModel::capture_target_layer(const Tensor& image, int head_index, int task_id) {
  check_task(task_id);
  if (head_index < 0 || head_index >= config_.classes_per_task) {
    throw std::out_of_range("class index " + std::to_string(head_index) + " outside head of width " +
                            std::to_string(config_.classes_per_task));
  }
  const Shape expected{config_.channels, config_.width, config_.width};
  if (image.shape() != expected) {
    throw std::invalid_argument("capture expects one image of shape " + shape_string(expected));
  }
  const Tensor x = image.reshaped({1, expected[0], expected[1], expected[2]});
  const Tensor act = run_backbone(x, false, target_index_ + 1);
  Tensor h = act;
  for (std::size_t i = target_index_ + 1; i < stages_.size(); ++i) h = stages_[i]->forward(h, false);
  Linear& hd = heads_[static_cast<std::size_t>(task_id - 1)];
  hd.forward(pool_.forward(h, false), false);

  Tensor g({1, config_.classes_per_task});
  g[static_cast<std::size_t>(head_index)] = 1.0f;
  g = pool_.backward(hd.backward(g));
  for (std::size_t i = stages_.size(); i-- > target_index_ + 1;) g = stages_[i]->backward(g);
  zero_grad();

  const Shape s = target_shape();
  return TargetCapture{act.reshaped(s), g.reshaped(s)};
}

Tensor MultiHeadModel::scores_from_target(const Tensor& activation, int task_id) {
  check_task(task_id);
  const Shape s = target_shape();
  if (activation.shape() != s) throw std::invalid_argument("activation does not match target shape " + shape_string(s));
  Tensor h = activation.reshaped({1, s[0], s[1], s[2]});
  for (std::size_t i = target_index_ + 1; i < stages_.size(); ++i) h = stages_[i]->forward(h, false);
  return heads_[static_cast<std::size_t>(task_id - 1)].forward(pool_.forward(h, false), false);
}

std::vector<int> MultiHeadModel::predict_topk(const Tensor& image, int task_id, int k) {
  const int cpt = config_.classes_per_task;
  if (k < 1 || k > cpt) throw std::out_of_range("top-k needs 1 <= k <= " + std::to_string(cpt));
  const Tensor x = image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)});
  const Tensor scores = forward(x, task_id);
  std::vector<int> order(static_cast<std::size_t>(cpt));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

std::vector<Parameter*> MultiHeadModel::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t i = 0; i < stages_.size(); ++i) stages_[i]->collect_parameters(stage_names_[i], out);
  for (std::size_t t = 0; t < heads_.size(); ++t) heads_[t].collect_parameters("head" + std::to_string(t + 1), out);
  return out;
}

std::vector<Buffer> MultiHeadModel::buffers() {
  std::vector<Buffer> out;
  for (std::size_t i = 0; i < stages_.size(); ++i) stages_[i]->collect_buffers(stage_names_[i], out);
  return out;
}

std::size_t MultiHeadModel::parameter_count() {
  std::size_t n = 0;
  for (Parameter* p : parameters()) n += p->value.size();
  return n;
}

// ---------------------------------------------------------------- checkpoint

namespace {

constexpr char kMagic[8] = {'E', 'P', 'R', 'M', 'O', 'D', 'L', '1'};

void write_floats(std::ofstream& out, const Tensor& t) {
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian host");
  out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
}

}  // namespace

void MultiHeadModel::save(const std::filesystem::path& file) {
  json desc;
  desc["format"] = "epr-model";
  desc["version"] = 1;
  desc["arch"] = to_string(config_.arch);
  desc["n_tasks"] = config_.n_tasks;
  desc["classes_per_task"] = config_.classes_per_task;
  desc["channels"] = config_.channels;
  desc["width"] = config_.width;
  desc["target_layer"] = target_name_;
  desc["seed"] = config_.seed;
  json heads = json::array();
  for (int t = 1; t <= config_.n_tasks; ++t) {
    heads.push_back({{"task_id", t}, {"weight", "head" + std::to_string(t) + ".weight"},
                     {"bias", "head" + std::to_string(t) + ".bias"}});
  }
  desc["heads"] = heads;
  json tensors = json::array();
  std::vector<const Tensor*> payload;
  for (Parameter* p : parameters()) {
    tensors.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"kind", "parameter"}});
    payload.push_back(&p->value);
  }
  for (const Buffer& b : buffers()) {
    tensors.push_back({{"name", b.name}, {"shape", b.value->shape()}, {"kind", "buffer"}});
    payload.push_back(b.value);
  }
  desc["tensors"] = tensors;

  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + file.string());
  const std::string header = desc.dump();
  const std::uint64_t len = header.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const Tensor* t : payload) write_floats(out, *t);
  if (!out) throw std::runtime_error("failed writing checkpoint " + file.string());
}

MultiHeadModel MultiHeadModel::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + file.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(file.string() + " is not an EPR model checkpoint");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("truncated checkpoint header in " + file.string());
  const json desc = json::parse(header);

  ModelConfig cfg;
  cfg.arch = parse_arch(desc.at("arch").get<std::string>());
  cfg.n_tasks = desc.at("n_tasks").get<int>();
  cfg.classes_per_task = desc.at("classes_per_task").get<int>();
  cfg.channels = desc.at("channels").get<int>();
  cfg.width = desc.at("width").get<int>();
  cfg.target_layer = desc.at("target_layer").get<std::string>();
  cfg.seed = desc.at("seed").get<std::uint64_t>();
  MultiHeadModel model(cfg);

  std::map<std::string, Tensor*> slots;
  for (Parameter* p : model.parameters()) slots[p->name] = &p->value;
  for (const Buffer& b : model.buffers()) slots[b.name] = b.value;
  const auto& tensors = desc.at("tensors");
  if (tensors.size() != slots.size()) throw std::runtime_error("checkpoint tensor table does not match architecture");
  for (const auto& entry : tensors) {
    const std::string name = entry.at("name").get<std::string>();
    auto it = slots.find(name);
    if (it == slots.end()) throw std::runtime_error("checkpoint has unknown tensor " + name);
    const Shape shape = entry.at("shape").get<Shape>();
    if (shape != it->second->shape()) throw std::runtime_error("checkpoint tensor " + name + " has wrong shape");
    in.read(reinterpret_cast<char*>(it->second->data()), static_cast<std::streamsize>(it->second->size() * sizeof(float)));
    if (!in) throw std::runtime_error("truncated checkpoint payload for " + name);
  }
  return model;
}

}  // namespace epr
