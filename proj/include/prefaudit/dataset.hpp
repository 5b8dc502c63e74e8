#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace prefaudit {

// One (prompt, chosen, rejected) record.
struct PreferenceExample {
  std::string id;
  std::string prompt;
  std::string chosen;
  std::string rejected;
  std::map<std::string, std::string> meta;

  bool operator==(const PreferenceExample&) const = default;
};

// Rule name -> number of examples removed by that rule. Conservation:
// ingested == kept + sum(dropped).
struct FilterLog {
  std::size_t ingested = 0;
  std::map<std::string, std::size_t> dropped;

  std::size_t total_dropped() const;
  void record(const std::string& rule, std::size_t count);

  bool operator==(const FilterLog&) const = default;
};

struct Provenance {
  std::string source;
  FilterLog filters;

  bool operator==(const Provenance&) const = default;
};

// Rule names used in FilterLog.
inline constexpr std::string_view kTieRule = "tie_dropped";
inline constexpr std::string_view kLengthRule = "length_dropped";
inline constexpr std::string_view kSplitRule = "split_other_side";
inline constexpr std::string_view kSubsampleRule = "subsample_excluded";
inline constexpr std::string_view kHighInfoRule = "high_info_excluded";

// An ordered, immutable collection of preference examples. Derived datasets
// are always new values; subsetting refers to examples by id.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<PreferenceExample> examples, Provenance provenance);

  const std::vector<PreferenceExample>& examples() const { return examples_; }
  const Provenance& provenance() const { return provenance_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const PreferenceExample& operator[](std::size_t i) const {
    return examples_[i];
  }

  std::vector<std::string> ids() const;
  // ingested == size() + total dropped.
  bool conserves_counts() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<PreferenceExample> examples_;
  Provenance provenance_;
};

enum class TiePolicy { kDrop, kError };

struct IngestOptions {
  TiePolicy tie_policy = TiePolicy::kDrop;
};

// Reads canonical JSONL. Missing ids become "line-<n>" (1-based line).
Dataset ingest(const std::filesystem::path& path,
               const IngestOptions& options = {});
// Same parser over an in-memory buffer; `source` names it in errors.
Dataset ingest_text(std::string_view text, const std::string& source,
                    const IngestOptions& options = {});

// Whitespace-split token count used as the length proxy.
std::size_t token_count(std::string_view text);

// Collapses whitespace runs and trims; used for tie detection.
std::string normalize_whitespace(std::string_view text);

// Drops examples where prompt + either response exceeds max_tokens.
Dataset length_filter(const Dataset& d, std::size_t max_tokens);

struct SplitSpec {
  double eval_fraction = 0.1;
  uint64_t seed = 0;
};

struct TrainEvalSplit {
  Dataset train;
  Dataset eval;
};

// Number of eval examples: round-half-away of eval_fraction*n, at least 1.
std::size_t eval_count(std::size_t n, double eval_fraction);

TrainEvalSplit split(const Dataset& d, const SplitSpec& spec);

// Nested subsample: the lowest ceil(fraction*n) examples by keyed hash
// priority, in priority order.
Dataset subsample(const Dataset& d, double fraction, uint64_t seed);
std::size_t subsample_count(std::size_t n, double fraction);

// Keeps the examples at the given ascending indices, logging the rest
// under `rule`.
Dataset select(const Dataset& d, const std::vector<std::size_t>& indices,
               std::string_view rule);

}  // namespace prefaudit
