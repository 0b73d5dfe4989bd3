#pragma once

#include <vector>

#include "epr/memory.hpp"
#include "epr/model.hpp"
#include "epr/saliency.hpp"

namespace epr {

/// How the memory-update step chooses the crop window inside each image.
enum class PatchLocator { saliency, random };

struct PackingConfig {
  SlotRatio n_sc{1};
  int epf = 1;
  int stride = 1;
  int width = 32;
  /// Staged images kept per class; 0 selects 2 * epf.
  int staging_per_class = 0;
  /// Rank candidates by zero-padded prediction before filling the quota.
  bool prioritize_predictions = true;
  PatchLocator locator = PatchLocator::saliency;

  int patch_width() const;
  int staging_capacity() const { return staging_per_class > 0 ? staging_per_class : 2 * epf; }
};

/// Largest integer W_p with epf * W_p^2 <= n_sc * W^2, i.e.
/// floor(sqrt(n_sc / epf) * W) evaluated exactly. Throws if it is 0.
int patch_width(const SlotRatio& n_sc, int epf, int width);

/// Number of W_p x W_p patches that fit the n_sc * W^2 budget.
SlotRatio epf_of(const SlotRatio& n_sc, int width, int patch_width);

struct PatchCorner {
  int x = 0;  // row
  int y = 0;  // column
  friend bool operator==(const PatchCorner&, const PatchCorner&) = default;
};

/// Candidate corners along one axis: 0, s, 2s, ... plus the last valid one.
std::vector<int> pooling_positions(int extent, int window, int stride);

/// Corner of the W_p x W_p window with the largest mean saliency among the
/// pooling positions; ties go to the smallest (x, y).
PatchCorner locate_salient_patch(const Grid& saliency, int patch_width, int stride);

/// Deep copy of image[:, x:x+W_p, y:y+W_p].
Tensor extract_patch(const Tensor& image, int x, int y, int patch_width);

/// Tier of the zero-padded patch under its task head.
PredictionTier classify_candidate(MultiHeadModel& model, const MemoryPatch& patch, int task_id);

struct PatchCandidate {
  MemoryPatch patch;
  PredictionTier tier = PredictionTier::other;
};

/// Fills `quota` by tier (correct, then top3, then other), keeping
/// insertion order within a tier.
std::vector<PatchCandidate> select_patches(const std::vector<PatchCandidate>& candidates, int quota);

struct MemoryUpdateReport {
  int patches_added = 0;
  std::vector<int> empty_classes;
  int tier_counts[3] = {0, 0, 0};
};

/// End-of-task memory update: for every staged class, crop each staged image
/// around its most salient window, rank the crops by zero-padded prediction
/// and append `epf` of them to memory. The caller clears `staging`.
MemoryUpdateReport update_memory(EpisodicMemory& memory, const RingBuffer& staging, MultiHeadModel& model,
                                 const PackingConfig& config, Rng* rng = nullptr);

}  // namespace epr
