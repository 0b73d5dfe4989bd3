#pragma once

#include "epr/memory.hpp"

namespace epr {

/// Full-size image that is zero except for the patch, placed at its stored
/// (x, y) corner.
Tensor zero_pad(const MemoryPatch& patch, int width, int height);

/// Patch at its stored corner; every other pixel is a standard-normal draw.
Tensor random_pad(const MemoryPatch& patch, int width, int height, Rng& rng);

/// Zero padding with the patch at a uniformly random valid corner.
Tensor random_place(const MemoryPatch& patch, int width, int height, Rng& rng);

/// Uniformly random W_p x W_p window of the example image, keeping its
/// true coordinates.
MemoryPatch random_snip(const Example& example, int patch_width, Rng& rng);

}  // namespace epr
