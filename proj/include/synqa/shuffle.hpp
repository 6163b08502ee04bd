// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace synqa {

/// Fisher-Yates shuffle drawing straight from mt19937_64, so the permutation
/// for a seed is identical across standard library implementations
/// (std::shuffle's use of uniform_int_distribution is not).
template <typename T>
void seeded_shuffle(std::span<T> items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace synqa
