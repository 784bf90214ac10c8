#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cran {

using Rng = std::mt19937_64;

/// Derives an independent generator from a master seed, a stream name and up
/// to two indices. The same arguments always produce the same sequence, so
/// work items seeded this way give identical results in any evaluation order.
Rng make_stream(std::uint64_t master_seed, std::string_view name,
                std::uint64_t index = 0, std::uint64_t sub_index = 0);

/// 64-bit seed derivation behind make_stream().
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view name,
                          std::uint64_t index = 0, std::uint64_t sub_index = 0);

}  // namespace cran
