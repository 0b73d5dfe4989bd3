#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace epr {

using Rng = std::mt19937_64;

/// Independent RNG stream for one purpose ("init", "order", "replay", ...)
/// within one run seed. Distinct (seed, purpose) pairs map to distinct
/// 64-bit stream seeds through a splitmix64 finalizer.
std::uint64_t stream_seed(std::uint64_t run_seed, std::string_view purpose);
Rng make_stream(std::uint64_t run_seed, std::string_view purpose);

/// First draw of the stream, recorded in run records so that seed
/// isolation can be checked after the fact.
std::uint64_t stream_fingerprint(std::uint64_t run_seed, std::string_view purpose);

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace epr
