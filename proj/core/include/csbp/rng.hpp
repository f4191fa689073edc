#pragma once

#include <cstdint>
#include <random>

namespace csbp {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of stream `index` under `base_seed`. Depends only on the pair, so
/// per-path streams are independent of scheduling.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index);

}  // namespace csbp
