#include "epr/packing.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "epr/padding.hpp"

namespace epr {

int patch_width(const SlotRatio& n_sc, int epf, int width) {
  if (epf < 1) throw std::invalid_argument("packing factor must be at least 1");
  if (!n_sc.positive()) throw std::invalid_argument("memory slots per class must be positive");
  if (width < 1) throw std::invalid_argument("image width must be positive");
  using i128 = __int128;
  const i128 budget = static_cast<i128>(n_sc.num()) * width * width;
  const i128 unit = static_cast<i128>(n_sc.den()) * epf;
  auto fits = [&](std::int64_t p) { return unit * p * p <= budget; };
  auto p = static_cast<std::int64_t>(std::floor(std::sqrt(n_sc.value() / epf) * width));
  while (p > 0 && !fits(p)) --p;
  while (fits(p + 1)) ++p;
  if (p == 0) {
    throw std::invalid_argument("n_sc=" + n_sc.to_string() + ", EPF=" + std::to_string(epf) + ", W=" +
                                std::to_string(width) + " gives a zero patch width");
  }
  if (p > width) {
    throw std::invalid_argument("n_sc=" + n_sc.to_string() + ", EPF=" + std::to_string(epf) +
                                " gives patches wider than the image; raise EPF");
  }
  return static_cast<int>(p);
}

int PackingConfig::patch_width() const { return epr::patch_width(n_sc, epf, width); }

SlotRatio epf_of(const SlotRatio& n_sc, int width, int patch_width) {
  if (patch_width <= 0) throw std::invalid_argument("patch width must be positive");
  if (patch_width > width) throw std::invalid_argument("patch wider than image");
  return SlotRatio(n_sc.num() * width * width, n_sc.den() * patch_width * patch_width);
}

std::vector<int> pooling_positions(int extent, int window, int stride) {
  if (window < 1 || window > extent) throw std::invalid_argument("pooling window must fit the map");
  if (stride < 1) throw std::invalid_argument("pooling stride must be at least 1");
  std::vector<int> pos;
  for (int p = 0; p <= extent - window; p += stride) pos.push_back(p);
  if (pos.back() != extent - window) pos.push_back(extent - window);
  return pos;
}

PatchCorner locate_salient_patch(const Grid& saliency, int patch_width, int stride) {
  if (saliency.rows != saliency.cols) throw std::invalid_argument("saliency map must be square");
  const std::vector<int> xs = pooling_positions(saliency.rows, patch_width, stride);
  const std::vector<int> ys = pooling_positions(saliency.cols, patch_width, stride);

  // Horizontal window sums for every row and candidate column, then the
  // vertical sums. The addition order is the same for every window, so
  // equal-valued windows compare exactly equal.
  std::vector<double> row_sums(static_cast<std::size_t>(saliency.rows) * ys.size());
  for (int r = 0; r < saliency.rows; ++r) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      double s = 0.0;
      for (int c = ys[j]; c < ys[j] + patch_width; ++c) s += saliency.at(r, c);
      row_sums[static_cast<std::size_t>(r) * ys.size() + j] = s;
    }
  }
  PatchCorner best{xs.front(), ys.front()};
  double best_sum = -1.0;
  bool first = true;
  for (int x : xs) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      double s = 0.0;
      for (int r = x; r < x + patch_width; ++r) s += row_sums[static_cast<std::size_t>(r) * ys.size() + j];
      if (first || s > best_sum) {
        best = {x, ys[j]};
        best_sum = s;
        first = false;
      }
    }
  }
  return best;
}

Tensor extract_patch(const Tensor& image, int x, int y, int patch_width) {
  if (image.rank() != 3) throw std::invalid_argument("extract_patch expects a (C, H, W) image");
  if (patch_width < 1 || x < 0 || y < 0 || x + patch_width > image.dim(1) || y + patch_width > image.dim(2)) {
    throw std::out_of_range("patch window (" + std::to_string(x) + ", " + std::to_string(y) + ") of width " +
                            std::to_string(patch_width) + " leaves image " + shape_string(image.shape()));
  }
  const int c = image.dim(0);
  Tensor out({c, patch_width, patch_width});
  for (int ch = 0; ch < c; ++ch) {
    for (int r = 0; r < patch_width; ++r) {
      for (int col = 0; col < patch_width; ++col) out.at(ch, r, col) = image.at(ch, x + r, y + col);
    }
  }
  return out;
}

PredictionTier classify_candidate(MultiHeadModel& model, const MemoryPatch& patch, int task_id) {
  const int width = model.config().width;
  const Tensor padded = zero_pad(patch, width, width);
  const int k = std::min(3, model.classes_per_task());
  const std::vector<int> ranked = model.predict_topk(padded, task_id, k);
  if (ranked.front() == patch.head_index) return PredictionTier::correct;
  if (std::find(ranked.begin(), ranked.end(), patch.head_index) != ranked.end()) return PredictionTier::top3;
  return PredictionTier::other;
}

std::vector<PatchCandidate> select_patches(const std::vector<PatchCandidate>& candidates, int quota) {
  if (quota < 0) throw std::invalid_argument("patch quota must be non-negative");
  std::vector<PatchCandidate> chosen;
  for (PredictionTier tier : {PredictionTier::correct, PredictionTier::top3, PredictionTier::other}) {
    for (const auto& c : candidates) {
      if (static_cast<int>(chosen.size()) >= quota) return chosen;
      if (c.tier == tier) chosen.push_back(c);
    }
  }
  return chosen;
}

MemoryUpdateReport update_memory(EpisodicMemory& memory, const RingBuffer& staging, MultiHeadModel& model,
                                 const PackingConfig& config, Rng* rng) {
  const int wp = config.patch_width();
  if (config.locator == PatchLocator::random && rng == nullptr) {
    throw std::invalid_argument("random patch placement needs an RNG");
  }
  MemoryUpdateReport report;
  for (int label : staging.classes()) {
    const auto& queue = staging.queue(label);
    if (queue.empty()) {
      std::cerr << "warning: no staged images for class " << label << "; it contributes no patches\n";
      report.empty_classes.push_back(label);
      continue;
    }
    std::vector<PatchCandidate> candidates;
    candidates.reserve(queue.size());
    for (const Example& ex : queue) {
      MemoryPatch patch;
      if (config.locator == PatchLocator::saliency) {
        const SaliencyMap sal = generate_saliency(model, *ex.image, ex.head_index, ex.task_id);
        const PatchCorner corner = locate_salient_patch(sal.values, wp, config.stride);
        patch.pixels = extract_patch(*ex.image, corner.x, corner.y, wp);
        patch.x = corner.x;
        patch.y = corner.y;
        patch.task_id = ex.task_id;
        patch.label = ex.label;
        patch.head_index = ex.head_index;
        patch.source_id = ex.source_id;
      } else {
        patch = random_snip(ex, wp, *rng);
      }
      PatchCandidate cand{std::move(patch), PredictionTier::other};
      if (config.prioritize_predictions) cand.tier = classify_candidate(model, cand.patch, ex.task_id);
      cand.patch.tier = cand.tier;
      candidates.push_back(std::move(cand));
    }
    const int room = memory.per_class_limit() - memory.count(queue.front().task_id, label);
    for (auto& c : select_patches(candidates, std::min(config.epf, std::max(room, 0)))) {
      ++report.tier_counts[static_cast<int>(c.tier)];
      memory.add(std::move(c.patch));
      ++report.patches_added;
    }
  }
  return report;
}

}  // namespace epr
