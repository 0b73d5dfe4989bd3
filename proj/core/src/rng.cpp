#include "epr/rng.hpp"

namespace epr {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t run_seed, std::string_view purpose) {
  return splitmix64(splitmix64(run_seed) ^ fnv1a(purpose));
}

Rng make_stream(std::uint64_t run_seed, std::string_view purpose) {
  return Rng(stream_seed(run_seed, purpose));
}

std::uint64_t stream_fingerprint(std::uint64_t run_seed, std::string_view purpose) {
  Rng rng = make_stream(run_seed, purpose);
  return rng();
}

}  // namespace epr
