#pragma once

#include <filesystem>

#include "epr/dataset.hpp"

namespace epr {

inline constexpr int kCifarWidth = 32;
inline constexpr int kCifarChannels = 3;
inline constexpr int kCifar100Classes = 100;

/// Reads the CIFAR-100 binary distribution (`train.bin`, `test.bin`) from a
/// directory. Each record is <coarse label byte><fine label byte><3072 pixel
/// bytes>; fine labels are used. Pixels are scaled to [0, 1].
Dataset load_cifar100_dir(const std::filesystem::path& dir);

}  // namespace epr
