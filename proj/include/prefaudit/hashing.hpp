#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace prefaudit {

// Stable 64-bit hashing and seeded sampling, bit-for-bit identical across
// platforms and standard libraries.

uint64_t fnv1a64(std::string_view bytes) noexcept;
uint64_t splitmix64(uint64_t x) noexcept;

// Salts keep the per-id streams of different consumers independent when
// they share a user-facing seed.
enum class HashSalt : uint64_t {
  kSubsample = 0x53756273616d706cULL,
  kFlip = 0x466c69704c61626cULL,
  kFeature = 0x4e6772616d466561ULL,
};

// Deterministic hash of (seed, salt, id).
uint64_t keyed_hash(uint64_t seed, HashSalt salt, std::string_view id) noexcept;

// Maps a 64-bit hash to a double uniform on [0, 1) using its top 53 bits.
double unit_interval(uint64_t h) noexcept;

// Unbiased integer in [0, bound) drawn from a mt19937_64 by rejection.
uint64_t bounded_uniform(std::mt19937_64& rng, uint64_t bound);

// In-place Fisher-Yates shuffle driven by bounded_uniform.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded_uniform(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

// Indices of a uniform random `k`-subset of [0, n), returned ascending.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k,
                                        uint64_t seed);

}  // namespace prefaudit
