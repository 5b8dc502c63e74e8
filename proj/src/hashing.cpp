#include "prefaudit/hashing.hpp"

#include <algorithm>
#include <numeric>

#include "prefaudit/error.hpp"

namespace prefaudit {

uint64_t fnv1a64(std::string_view bytes) noexcept {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t splitmix64(uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t keyed_hash(uint64_t seed, HashSalt salt,
                    std::string_view id) noexcept {
  const uint64_t keyed = splitmix64(seed ^ static_cast<uint64_t>(salt));
  return splitmix64(keyed ^ fnv1a64(id));
}

double unit_interval(uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

uint64_t bounded_uniform(std::mt19937_64& rng, uint64_t bound) {
  if (bound == 0) throw Error("invalid_argument", "bounded_uniform: bound is 0");
  // Reject the incomplete top block so every residue is equally likely.
  const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % bound + 1) % bound;
  uint64_t draw;
  do {
    draw = rng();
  } while (draw > limit);
  return draw % bound;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k,
                                        uint64_t seed) {
  if (k > n) {
    throw Error("invalid_argument", "sample_indices: k exceeds population");
  }
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first k slots end up as the sample.
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(bounded_uniform(rng, n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace prefaudit
