#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "prefaudit/dataset.hpp"
#include "prefaudit/features.hpp"

namespace prefaudit {

// Bradley-Terry data generated from a known linear reward w*. Response
// vectors are stored under the chosen/rejected roles; response texts list
// one token per strongly positive or negative coordinate so the hashed
// featurizer sees related signal.
struct SyntheticData {
  Dataset data;
  EmbeddingTable embeddings{1};
  std::vector<double> w_star;
};

enum class SyntheticLabels {
  kBradleyTerry,  // winner drawn with P = sigma(w* . (a - b))
  kSeparable,     // winner = argmax w* . x, pairs with margin < 1 redrawn
};

struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t dim = 16;
  uint64_t seed = 0;
  double weight_norm = 2.0;  // |w*|
  SyntheticLabels labels = SyntheticLabels::kBradleyTerry;
  // When true, rejected = sqrt(1 - t^2) a + t g with t ~ U(0, 1), so pairs
  // with lower cosine similarity also carry larger reward margins.
  bool similarity_correlated = false;
  std::string id_prefix = "s";
};

// Deterministic, platform-independent standard normal stream.
class NormalStream {
 public:
  explicit NormalStream(uint64_t seed) : state_(seed) {}
  double uniform();  // (0, 1)
  double normal();

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::vector<double> random_unit_direction(std::size_t dim, uint64_t seed,
                                          double norm = 1.0);

// Draws `spec.n` pairs; with the same w_star, different seeds give
// independent samples from one population (e.g. train vs. eval).
SyntheticData make_synthetic(const SyntheticSpec& spec,
                             const std::vector<double>& w_star);
SyntheticData make_synthetic(const SyntheticSpec& spec);

// Union of two synthetic draws over the same w*; ids must not collide.
SyntheticData merge_synthetic(const SyntheticData& a, const SyntheticData& b);

}  // namespace prefaudit
