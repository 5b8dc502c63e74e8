#include "prefaudit/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "prefaudit/error.hpp"
#include "prefaudit/hashing.hpp"

namespace prefaudit {

using nlohmann::json;

namespace {

constexpr double kUnitNormTolerance = 1e-6;

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

std::string missing_keys_message(const std::vector<std::string>& missing) {
  constexpr std::size_t kShown = 20;
  std::string msg = "missing embeddings for " + std::to_string(missing.size()) +
                    " key(s):";
  for (std::size_t i = 0; i < missing.size() && i < kShown; ++i) {
    msg += " " + missing[i];
  }
  if (missing.size() > kShown) {
    msg += " ... (" + std::to_string(missing.size() - kShown) + " more)";
  }
  return msg;
}

}  // namespace

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kPrompt: return "prompt";
    case Role::kChosen: return "chosen";
    case Role::kRejected: return "rejected";
    case Role::kPromptChosen: return "prompt_chosen";
    case Role::kPromptRejected: return "prompt_rejected";
  }
  return "unknown";
}

std::optional<Role> parse_role(std::string_view name) {
  for (Role r : {Role::kPrompt, Role::kChosen, Role::kRejected,
                 Role::kPromptChosen, Role::kPromptRejected}) {
    if (role_name(r) == name) return r;
  }
  return std::nullopt;
}

std::string embedding_key(std::string_view id, Role role) {
  std::string key(id);
  key += ':';
  key += role_name(role);
  return key;
}

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error("invalid_argument", "embedding dim must be >= 1");
}

void EmbeddingTable::insert(std::string key, std::vector<double> vec) {
  if (vec.size() != dim_) {
    throw Error("embedding", "key \"" + key + "\" has " +
                                 std::to_string(vec.size()) +
                                 " values, expected " + std::to_string(dim_));
  }
  for (double x : vec) {
    if (!std::isfinite(x)) {
      throw Error("embedding", "key \"" + key + "\" has a non-finite value");
    }
  }
  if (std::abs(l2_norm(vec) - 1.0) > kUnitNormTolerance) normalized_ = false;
  auto [it, inserted] = vectors_.emplace(std::move(key), std::move(vec));
  if (!inserted) {
    throw Error("embedding", "duplicate key \"" + it->first + "\"");
  }
}

const std::vector<double>* EmbeddingTable::find_key(const std::string& key) const {
  auto it = vectors_.find(key);
  return it == vectors_.end() ? nullptr : &it->second;
}

const std::vector<double>* EmbeddingTable::find(std::string_view id,
                                                Role role) const {
  return find_key(embedding_key(id, role));
}

std::vector<std::string> EmbeddingTable::keys() const {
  std::vector<std::string> out;
  out.reserve(vectors_.size());
  for (const auto& [key, vec] : vectors_) out.push_back(key);
  std::sort(out.begin(), out.end());
  return out;
}

EmbeddingTable parse_embeddings(std::string_view text, const std::string& source,
                                const EmbeddingLoadOptions& options) {
  std::optional<EmbeddingTable> table;
  if (options.expect_dim) table.emplace(*options.expect_dim);

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error("embedding", where + "malformed JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("key") || !obj["key"].is_string() ||
        !obj.contains("vec") || !obj["vec"].is_array()) {
      throw Error("embedding", where + "expected {\"key\": str, \"vec\": [number]}");
    }
    std::string key = obj["key"].get<std::string>();
    const auto colon = key.rfind(':');
    if (colon == std::string::npos || colon == 0) {
      throw Error("embedding", where + "key \"" + key + "\" is not <id>:<role>");
    }
    if (!parse_role(std::string_view(key).substr(colon + 1))) {
      throw Error("embedding", where + "unknown role in key \"" + key + "\"");
    }
    std::vector<double> vec;
    vec.reserve(obj["vec"].size());
    for (const auto& v : obj["vec"]) {
      if (!v.is_number()) {
        throw Error("embedding", where + "non-numeric value in key \"" + key + "\"");
      }
      vec.push_back(v.get<double>());
    }
    if (!table) {
      if (vec.empty()) throw Error("embedding", where + "empty vector");
      table.emplace(vec.size());
    }
    if (vec.size() != table->dim()) {
      throw Error("embedding", where + "key \"" + key + "\" has dimension " +
                                   std::to_string(vec.size()) + ", expected " +
                                   std::to_string(table->dim()));
    }
    if (options.renormalize) {
      const double norm = l2_norm(vec);
      if (norm == 0.0) {
        throw Error("embedding", where + "zero vector for key \"" + key +
                                     "\" cannot be normalized");
      }
      for (double& x : vec) x /= norm;
    }
    try {
      table->insert(std::move(key), std::move(vec));
    } catch (const Error& e) {
      throw Error("embedding", where + e.what());
    }
  }
  if (!table) throw Error("embedding", source + ": no embeddings");
  return std::move(*table);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const EmbeddingLoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_embeddings(buffer.str(), path.string(), options);
}

std::string dump_embeddings(const EmbeddingTable& table) {
  std::string out;
  for (const auto& key : table.keys()) {
    json row;
    row["key"] = key;
    row["vec"] = *table.find_key(key);
    out += row.dump();
    out += '\n';
  }
  return out;
}

std::vector<double> hash_text(std::string_view text, std::size_t dim,
                              uint64_t seed) {
  if (dim == 0) throw Error("invalid_argument", "hash dim must be >= 1");
  std::string padded;
  padded.reserve(text.size() + 2);
  padded.push_back('\x02');
  padded.append(text);
  padded.push_back('\x03');

  std::vector<double> vec(dim, 0.0);
  const uint64_t key = splitmix64(seed ^ static_cast<uint64_t>(HashSalt::kFeature));
  const std::string_view view(padded);
  bool any = false;
  for (std::size_t n = kMinNgram; n <= kMaxNgram; ++n) {
    for (std::size_t i = 0; i + n <= view.size(); ++i) {
      const uint64_t h = splitmix64(key ^ fnv1a64(view.substr(i, n)));
      vec[h % dim] += 1.0;
      any = true;
    }
  }
  if (!any) {
    // Too short for any n-gram: a single bucket stands in for the text.
    vec[splitmix64(key ^ fnv1a64(view)) % dim] = 1.0;
  }
  const double norm = l2_norm(vec);
  for (double& x : vec) x /= norm;
  return vec;
}

EmbeddingTable hash_featurize(const Dataset& d, std::size_t dim, uint64_t seed) {
  if (dim < 8) throw Error("invalid_argument", "hash_featurize needs dim >= 8");
  EmbeddingTable table(dim);
  for (const auto& ex : d.examples()) {
    table.insert(embedding_key(ex.id, Role::kPrompt), hash_text(ex.prompt, dim, seed));
    table.insert(embedding_key(ex.id, Role::kChosen), hash_text(ex.chosen, dim, seed));
    table.insert(embedding_key(ex.id, Role::kRejected),
                 hash_text(ex.rejected, dim, seed));
    table.insert(embedding_key(ex.id, Role::kPromptChosen),
                 hash_text(ex.prompt + "\n" + ex.chosen, dim, seed));
    table.insert(embedding_key(ex.id, Role::kPromptRejected),
                 hash_text(ex.prompt + "\n" + ex.rejected, dim, seed));
  }
  return table;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error("dimension", "cosine_similarity: dimensions " +
                                 std::to_string(a.size()) + " and " +
                                 std::to_string(b.size()) + " differ");
  }
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) {
    throw Error("invalid_argument", "cosine_similarity of a zero vector");
  }
  return std::clamp(dot / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

std::vector<double> pair_similarities(const Dataset& d, const EmbeddingTable& e) {
  std::vector<std::string> missing;
  std::vector<double> sims;
  sims.reserve(d.size());
  for (const auto& ex : d.examples()) {
    const auto* chosen = e.find(ex.id, Role::kChosen);
    const auto* rejected = e.find(ex.id, Role::kRejected);
    if (!chosen) missing.push_back(embedding_key(ex.id, Role::kChosen));
    if (!rejected) missing.push_back(embedding_key(ex.id, Role::kRejected));
    if (chosen && rejected) sims.push_back(cosine_similarity(*chosen, *rejected));
  }
  if (!missing.empty()) throw Error("embedding", missing_keys_message(missing));
  return sims;
}

SimilarityReport similarity_report(const Dataset& d, const EmbeddingTable& e,
                                   double threshold, std::size_t bins,
                                   bool keep_per_example) {
  if (bins == 0) throw Error("invalid_argument", "bins must be >= 1");
  if (d.empty()) throw Error("similarity", "empty dataset");
  const std::vector<double> sims = pair_similarities(d, e);

  SimilarityReport report;
  report.threshold = threshold;
  report.histogram.resize(bins);
  const double width = 2.0 / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    report.histogram[b].lo = -1.0 + width * static_cast<double>(b);
    report.histogram[b].hi =
        b + 1 == bins ? 1.0 : -1.0 + width * static_cast<double>(b + 1);
  }
  std::size_t below = 0;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    const double s = sims[i];
    auto b = static_cast<std::size_t>(std::floor((s + 1.0) / width));
    b = std::min(b, bins - 1);
    ++report.histogram[b].count;
    if (s < threshold) ++below;
    if (keep_per_example) report.per_example.emplace_back(d[i].id, s);
  }
  report.high_info_fraction =
      static_cast<double>(below) / static_cast<double>(sims.size());
  return report;
}

Dataset high_info_subset(const Dataset& d, const EmbeddingTable& e,
                         double threshold, std::size_t size, uint64_t seed) {
  const std::vector<double> sims = pair_similarities(d, e);
  std::vector<std::size_t> qualifying;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    if (sims[i] < threshold) qualifying.push_back(i);
  }
  if (qualifying.size() < size) {
    throw Error("high_info", "requested " + std::to_string(size) +
                                 " high-information pairs but only " +
                                 std::to_string(qualifying.size()) +
                                 " have similarity below " +
                                 std::to_string(threshold));
  }
  std::vector<std::size_t> picked;
  picked.reserve(size);
  for (std::size_t j : sample_indices(qualifying.size(), size, seed)) {
    picked.push_back(qualifying[j]);
  }
  return select(d, picked, kHighInfoRule);
}

}  // namespace prefaudit
