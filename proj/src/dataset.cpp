#include "prefaudit/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "prefaudit/error.hpp"
#include "prefaudit/hashing.hpp"

namespace prefaudit {

using nlohmann::json;

std::size_t FilterLog::total_dropped() const {
  std::size_t total = 0;
  for (const auto& [rule, count] : dropped) total += count;
  return total;
}

void FilterLog::record(const std::string& rule, std::size_t count) {
  dropped[rule] += count;
}

Dataset::Dataset(std::vector<PreferenceExample> examples, Provenance provenance)
    : examples_(std::move(examples)), provenance_(std::move(provenance)) {}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(examples_.size());
  for (const auto& ex : examples_) out.push_back(ex.id);
  return out;
}

bool Dataset::conserves_counts() const {
  return provenance_.filters.ingested ==
         examples_.size() + provenance_.filters.total_dropped();
}

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

[[noreturn]] void fail_line(const std::string& source, std::size_t line,
                            const std::string& what) {
  throw Error("ingest", source + ":" + std::to_string(line) + ": " + what);
}

std::string required_text(const json& obj, const char* field,
                          const std::string& source, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    fail_line(source, line, std::string("missing field \"") + field + "\"");
  }
  if (!it->is_string()) {
    fail_line(source, line, std::string("field \"") + field +
                                "\" must be a string");
  }
  return it->get<std::string>();
}

std::string meta_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::size_t token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

Dataset ingest_text(std::string_view text, const std::string& source,
                    const IngestOptions& options) {
  std::vector<PreferenceExample> examples;
  std::unordered_set<std::string> seen;
  FilterLog log;
  std::size_t line_no = 0;
  std::size_t records = 0;

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (std::all_of(line.begin(), line.end(), is_space)) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_line(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) fail_line(source, line_no, "expected a JSON object");
    ++records;

    PreferenceExample ex;
    ex.prompt = required_text(obj, "prompt", source, line_no);
    ex.chosen = required_text(obj, "chosen", source, line_no);
    ex.rejected = required_text(obj, "rejected", source, line_no);
    if (ex.chosen.empty()) fail_line(source, line_no, "empty \"chosen\"");
    if (ex.rejected.empty()) fail_line(source, line_no, "empty \"rejected\"");

    if (auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
      if (!it->is_string() || it->get<std::string>().empty()) {
        fail_line(source, line_no, "\"id\" must be a non-empty string");
      }
      ex.id = it->get<std::string>();
    } else {
      ex.id = "line-" + std::to_string(line_no);
    }
    if (auto it = obj.find("meta"); it != obj.end() && !it->is_null()) {
      if (!it->is_object()) fail_line(source, line_no, "\"meta\" must be an object");
      for (const auto& [key, value] : it->items()) ex.meta[key] = meta_value(value);
    }
    if (!seen.insert(ex.id).second) {
      fail_line(source, line_no, "duplicate id \"" + ex.id + "\"");
    }

    const auto tie_flag = ex.meta.find("tie");
    const bool tie =
        (tie_flag != ex.meta.end() && tie_flag->second == "true") ||
        normalize_whitespace(ex.chosen) == normalize_whitespace(ex.rejected);
    if (tie) {
      if (options.tie_policy == TiePolicy::kError) {
        fail_line(source, line_no, "tie in example \"" + ex.id + "\"");
      }
      log.record(std::string(kTieRule), 1);
      continue;
    }
    examples.push_back(std::move(ex));
  }

  if (records == 0) throw Error("ingest", source + ": no records");
  log.ingested = records;
  log.dropped.try_emplace(std::string(kTieRule), 0);
  return Dataset(std::move(examples), Provenance{source, std::move(log)});
}

Dataset ingest(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ingest_text(buffer.str(), path.string(), options);
}

Dataset select(const Dataset& d, const std::vector<std::size_t>& indices,
               std::string_view rule) {
  std::vector<PreferenceExample> kept;
  kept.reserve(indices.size());
  for (std::size_t i : indices) kept.push_back(d[i]);
  Provenance prov = d.provenance();
  prov.filters.record(std::string(rule), d.size() - indices.size());
  return Dataset(std::move(kept), std::move(prov));
}

Dataset length_filter(const Dataset& d, std::size_t max_tokens) {
  if (max_tokens == 0) {
    throw Error("invalid_argument", "max_tokens must be >= 1");
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& ex = d[i];
    const std::size_t prompt_tokens = token_count(ex.prompt);
    const std::size_t longest =
        std::max(token_count(ex.chosen), token_count(ex.rejected));
    if (prompt_tokens + longest <= max_tokens) keep.push_back(i);
  }
  return select(d, keep, kLengthRule);
}

std::size_t eval_count(std::size_t n, double eval_fraction) {
  const auto rounded = std::llround(eval_fraction * static_cast<double>(n));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::max(0LL, rounded)));
}

TrainEvalSplit split(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.eval_fraction > 0.0 && spec.eval_fraction < 1.0)) {
    throw Error("invalid_argument", "eval_fraction must lie in (0, 1)");
  }
  if (d.size() < 2) {
    throw Error("split", "need at least 2 examples to split, have " +
                             std::to_string(d.size()));
  }
  const std::size_t n_eval = eval_count(d.size(), spec.eval_fraction);
  if (n_eval >= d.size()) {
    throw Error("split", "eval_fraction " + std::to_string(spec.eval_fraction) +
                             " leaves no training examples out of " +
                             std::to_string(d.size()));
  }
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  seeded_shuffle(order, rng);

  std::vector<std::size_t> eval_idx(order.begin(), order.begin() + n_eval);
  std::vector<std::size_t> train_idx(order.begin() + n_eval, order.end());
  std::sort(eval_idx.begin(), eval_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {select(d, train_idx, kSplitRule), select(d, eval_idx, kSplitRule)};
}

std::size_t subsample_count(std::size_t n, double fraction) {
  // The 1e-9 slack absorbs representation error such as 0.1 * 1000.
  return static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

Dataset subsample(const Dataset& d, double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error("invalid_argument", "subsample fraction must lie in (0, 1]");
  }
  const std::size_t k = subsample_count(d.size(), fraction);
  if (fraction * static_cast<double>(d.size()) < 1.0 - 1e-9) {
    throw Error("subsample", "fraction " + std::to_string(fraction) + " of " +
                                 std::to_string(d.size()) +
                                 " examples selects nothing");
  }
  struct Ranked {
    uint64_t priority;
    std::size_t index;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    ranked.push_back({keyed_hash(seed, HashSalt::kSubsample, d[i].id), i});
  }
  std::sort(ranked.begin(), ranked.end(), [&](const Ranked& a, const Ranked& b) {
    if (a.priority != b.priority) return a.priority < b.priority;
    return d[a.index].id < d[b.index].id;
  });

  std::vector<PreferenceExample> kept;
  kept.reserve(k);
  for (std::size_t i = 0; i < k; ++i) kept.push_back(d[ranked[i].index]);
  Provenance prov = d.provenance();
  prov.filters.record(std::string(kSubsampleRule), d.size() - k);
  return Dataset(std::move(kept), std::move(prov));
}

}  // namespace prefaudit
