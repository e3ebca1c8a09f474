#pragma once

#include <cstdint>
#include <initializer_list>

namespace netinf {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for stream `index` of `master`: mix64(mix64(master) ^ index).
/// Per-trial seeds in the benchmark are derive_seed(master, trial); nested
/// streams chain further calls (trial -> node -> structure -> ...).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ index);
}

constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = master;
  for (auto i : path) s = derive_seed(s, i);
  return s;
}

}  // namespace netinf
