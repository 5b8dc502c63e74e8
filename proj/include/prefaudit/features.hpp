#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prefaudit/dataset.hpp"

namespace prefaudit {

// Which text of an example a vector embeds. The prompt-conditioned roles
// hold embeddings of prompt + "\n" + response.
enum class Role { kPrompt, kChosen, kRejected, kPromptChosen, kPromptRejected };

std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view name);

// "<example_id>:<role>"; ids may themselves contain ':'.
std::string embedding_key(std::string_view id, Role role);

// Fixed-dimension vectors keyed by (example id, role). Immutable once built.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  // True iff every vector has unit Euclidean norm within 1e-6.
  bool normalized() const { return normalized_; }

  // Throws on wrong length or a duplicate key.
  void insert(std::string key, std::vector<double> vec);
  const std::vector<double>* find(std::string_view id, Role role) const;
  const std::vector<double>* find_key(const std::string& key) const;
  bool contains(std::string_view id, Role role) const {
    return find(id, role) != nullptr;
  }

  // Sorted keys; used for deterministic serialization.
  std::vector<std::string> keys() const;

 private:
  std::size_t dim_;
  bool normalized_ = true;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct EmbeddingLoadOptions {
  std::optional<std::size_t> expect_dim;
  // Rescale every vector to unit norm on load (zero vectors are an error).
  bool renormalize = false;
};

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const EmbeddingLoadOptions& options = {});
EmbeddingTable parse_embeddings(std::string_view text, const std::string& source,
                                const EmbeddingLoadOptions& options = {});
// One {"key", "vec"} object per line, keys sorted.
std::string dump_embeddings(const EmbeddingTable& table);

// Character n-gram orders used by hash_featurize.
inline constexpr std::size_t kMinNgram = 3;
inline constexpr std::size_t kMaxNgram = 5;
inline constexpr std::size_t kDefaultHashDim = 512;

// Counts of hashed character n-grams of "\x02" + text + "\x03", n in
// [kMinNgram, kMaxNgram], L2-normalized.
std::vector<double> hash_text(std::string_view text, std::size_t dim,
                              uint64_t seed);

// Embeds every role of every example (including prompt-conditioned roles).
EmbeddingTable hash_featurize(const Dataset& d, std::size_t dim, uint64_t seed);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

inline constexpr double kDefaultSimilarityThreshold = 0.8;
inline constexpr std::size_t kDefaultSimilarityBins = 50;

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;

  bool operator==(const HistogramBin&) const = default;
};

struct SimilarityReport {
  std::vector<HistogramBin> histogram;
  double high_info_fraction = 0.0;
  double threshold = kDefaultSimilarityThreshold;
  std::vector<std::pair<std::string, double>> per_example;

  bool operator==(const SimilarityReport&) const = default;
};

// Cosine similarity of chosen vs. rejected response embeddings, in dataset
// order. Throws listing missing keys.
std::vector<double> pair_similarities(const Dataset& d, const EmbeddingTable& e);

// Equal-width histogram over [-1, 1].
SimilarityReport similarity_report(const Dataset& d, const EmbeddingTable& e,
                                   double threshold = kDefaultSimilarityThreshold,
                                   std::size_t bins = kDefaultSimilarityBins,
                                   bool keep_per_example = false);

// Seeded uniform sample of `size` examples among pairs with similarity below
// `threshold`, returned in dataset order.
Dataset high_info_subset(const Dataset& d, const EmbeddingTable& e,
                         double threshold, std::size_t size, uint64_t seed);

}  // namespace prefaudit
