#include "prefaudit/features.hpp"

#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "prefaudit/error.hpp"
#include "test_support.hpp"

using namespace prefaudit;

namespace {

Dataset make_dataset(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<PreferenceExample> ex;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ex.push_back({"e" + std::to_string(i), "prompt " + std::to_string(i), pairs[i].first,
                  pairs[i].second, {}});
  }
  FilterLog log;
  log.ingested = ex.size();
  return Dataset(std::move(ex), {"mem", log});
}

// Pairs whose chosen/rejected cosine similarity is exactly `sims[i]` up to
// rounding: chosen = (1, 0), rejected = (s, sqrt(1 - s^2)).
std::pair<Dataset, EmbeddingTable> similarity_fixture(const std::vector<double>& sims) {
  std::vector<std::pair<std::string, std::string>> texts;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    texts.emplace_back("c" + std::to_string(i), "r" + std::to_string(i));
  }
  Dataset d = make_dataset(texts);
  EmbeddingTable e(2);
  for (std::size_t i = 0; i < sims.size(); ++i) {
    const double s = sims[i];
    e.insert(embedding_key(d[i].id, Role::kChosen), {1.0, 0.0});
    e.insert(embedding_key(d[i].id, Role::kRejected), {s, std::sqrt(1.0 - s * s)});
  }
  return {std::move(d), std::move(e)};
}

std::set<std::string> ngrams(const std::string& text) {
  const std::string padded = "\x02" + text + "\x03";
  std::set<std::string> out;
  for (std::size_t n = 3; n <= 5; ++n) {
    for (std::size_t i = 0; i + n <= padded.size(); ++i) out.insert(padded.substr(i, n));
  }
  return out;
}

}  // namespace

TEST_CASE("roles and keys") {
  CHECK(embedding_key("a:b", Role::kChosen) == "a:b:chosen");
  CHECK(parse_role("prompt_rejected") == Role::kPromptRejected);
  CHECK_FALSE(parse_role("reply").has_value());
}

TEST_CASE("load_embeddings: two 4-dim rows") {
  const auto path = testing::write_temp(
      "emb4.jsonl", R"({"key": "x:chosen", "vec": [1, 0, 0, 0]})"
                    "\n"
                    R"({"key": "x:rejected", "vec": [0, 1, 0, 0]})"
                    "\n");
  const EmbeddingTable t = load_embeddings(path);
  CHECK(t.size() == 2);
  CHECK(t.dim() == 4);
  CHECK(t.normalized());
  REQUIRE(t.find("x", Role::kRejected) != nullptr);
  CHECK((*t.find("x", Role::kRejected))[1] == 1.0);
}

TEST_CASE("load_embeddings: dimension mismatch names the key") {
  const std::string text = R"({"key": "x:chosen", "vec": [1, 0, 0, 0]})"
                           "\n"
                           R"({"key": "y:chosen", "vec": [1, 0, 0]})"
                           "\n";
  CHECK_THROWS_WITH_AS(parse_embeddings(text, "f"), doctest::Contains("y:chosen"), Error);
}

TEST_CASE("load_embeddings: expect_dim 384") {
  std::string row = R"({"key": "x:chosen", "vec": [)";
  for (int i = 0; i < 384; ++i) row += (i ? ",0" : "1");
  row += "]}\n";
  CHECK(parse_embeddings(row, "f", {384, false}).dim() == 384);
  CHECK_THROWS_AS(parse_embeddings(row, "f", {512, false}), Error);
}

TEST_CASE("load_embeddings: malformed inputs") {
  CHECK_THROWS_WITH_AS(parse_embeddings(R"({"key": "x:answer", "vec": [1]})", "f"),
                       doctest::Contains("unknown role"), Error);
  CHECK_THROWS_WITH_AS(parse_embeddings(R"({"key": "x:chosen", "vec": [1]})"
                                        "\n"
                                        R"({"key": "x:chosen", "vec": [1]})",
                                        "f"),
                       doctest::Contains("duplicate"), Error);
  CHECK_THROWS_AS(parse_embeddings(R"({"key": "nocolon", "vec": [1]})", "f"), Error);
  CHECK_THROWS_AS(parse_embeddings(R"({"key": "x:chosen", "vec": ["a"]})", "f"), Error);
  CHECK_THROWS_AS(parse_embeddings("", "f"), Error);
}

TEST_CASE("load_embeddings: renormalize") {
  const std::string text = R"({"key": "x:chosen", "vec": [3, 4]})";
  const EmbeddingTable raw = parse_embeddings(text, "f");
  CHECK_FALSE(raw.normalized());
  const EmbeddingTable unit = parse_embeddings(text, "f", {std::nullopt, true});
  CHECK(unit.normalized());
  CHECK((*unit.find("x", Role::kChosen))[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK_THROWS_AS(parse_embeddings(R"({"key": "x:chosen", "vec": [0, 0]})", "f",
                                   {std::nullopt, true}),
                  Error);
}

TEST_CASE("dump_embeddings round-trips") {
  const auto [d, e] = similarity_fixture({0.3, 0.9});
  const EmbeddingTable back = parse_embeddings(dump_embeddings(e), "f");
  CHECK(back.keys() == e.keys());
  for (const auto& key : e.keys()) CHECK(*back.find_key(key) == *e.find_key(key));
}

TEST_CASE("hash_featurize: identical texts give similarity 1") {
  const Dataset d = make_dataset({{"the same words here", "the same words here"}});
  const EmbeddingTable e = hash_featurize(d, 512, 1);
  CHECK(cosine_similarity(*e.find("e0", Role::kChosen), *e.find("e0", Role::kRejected)) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(e.size() == 5);
  CHECK(e.normalized());
}

TEST_CASE("hash_featurize is deterministic") {
  const Dataset d = make_dataset({{"alpha beta", "gamma"}, {"x", "a longer response text"}});
  CHECK(dump_embeddings(hash_featurize(d, 64, 7)) == dump_embeddings(hash_featurize(d, 64, 7)));
  CHECK(dump_embeddings(hash_featurize(d, 64, 7)) != dump_embeddings(hash_featurize(d, 64, 8)));
  CHECK_THROWS_AS(hash_featurize(d, 4, 0), Error);
}

TEST_CASE("hash_featurize: disjoint n-gram sets give similarity 0") {
  const std::string a = "abcab", b = "xyzxy";
  // Oracle: the two padded texts share no character n-gram.
  const auto na = ngrams(a), nb = ngrams(b);
  std::vector<std::string> common;
  std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(common));
  REQUIRE(common.empty());
  const auto va = hash_text(a, 1 << 16, 0), vb = hash_text(b, 1 << 16, 0);
  CHECK(cosine_similarity(va, vb) == 0.0);
}

TEST_CASE("hash_text: unit norm for any nonempty text") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::string text;
    const std::size_t len = 1 + rng() % 60;
    for (std::size_t i = 0; i < len; ++i) text.push_back(static_cast<char>(' ' + rng() % 90));
    const auto v = hash_text(text, 128, trial);
    double sq = 0;
    for (double x : v) sq += x * x;
    CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-9));
  }
  // Too short for a 3-gram still yields a unit vector.
  const auto empty = hash_text("", 16, 0);
  double sq = 0;
  for (double x : empty) sq += x * x;
  CHECK(sq == 1.0);
}

TEST_CASE("cosine_similarity identities") {
  CHECK(cosine_similarity(std::vector<double>{0.3, -2, 5}, std::vector<double>{0.3, -2, 5}) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{r, r}) -
                 0.70710678118654752) < 1e-9);
  CHECK_THROWS_AS(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), Error);
  CHECK_THROWS_AS(cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 0}), Error);
}

TEST_CASE("cosine_similarity: symmetry and positive-scale invariance") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(1 + trial % 20), b(a.size());
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng);
    const double lambda = scale(rng);
    std::vector<double> la = a;
    for (auto& x : la) x *= lambda;
    const double s = cosine_similarity(a, b);
    CHECK(std::abs(s - cosine_similarity(b, a)) <= 1e-9);
    CHECK(std::abs(s - cosine_similarity(la, b)) <= 1e-9);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("similarity_report: 4-pair hand check") {
  const auto [d, e] = similarity_fixture({0.5, 0.7, 0.9, 0.95});
  const SimilarityReport r = similarity_report(d, e, 0.8, 50, true);
  CHECK(r.high_info_fraction == 0.5);
  CHECK(r.threshold == 0.8);
  CHECK(r.histogram.size() == 50);
  std::size_t mass = 0;
  for (const auto& b : r.histogram) mass += b.count;
  CHECK(mass == 4);
  CHECK(r.histogram.front().lo == -1.0);
  CHECK(r.histogram.back().hi == 1.0);
  REQUIRE(r.per_example.size() == 4);
  std::size_t below = 0;
  for (const auto& [id, s] : r.per_example) below += s < r.threshold;
  CHECK(static_cast<double>(below) / 4.0 == r.high_info_fraction);
  // 0.5 falls in [0.48, 0.52).
  CHECK(r.histogram[37].count == 1);
}

TEST_CASE("similarity_report: identical texts have no high-information pairs") {
  const Dataset d = make_dataset({{"same", "same"}, {"also same", "also same"}});
  const SimilarityReport r = similarity_report(d, hash_featurize(d, 256, 0));
  CHECK(r.high_info_fraction == 0.0);
  CHECK(r.histogram.back().count == 2);
  CHECK(kDefaultSimilarityThreshold == 0.8);
}

TEST_CASE("similarity_report: histogram mass on random data") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> sims(300);
  for (auto& s : sims) s = u(rng);
  sims[0] = 1.0;
  sims[1] = -1.0;
  const auto [d, e] = similarity_fixture(sims);
  for (std::size_t bins : {1, 7, 50, 64}) {
    const SimilarityReport r = similarity_report(d, e, 0.8, bins, true);
    std::size_t mass = 0;
    for (const auto& b : r.histogram) mass += b.count;
    CHECK(mass == sims.size());
    std::size_t below = 0;
    for (const auto& [id, s] : r.per_example) below += s < 0.8;
    CHECK(r.high_info_fraction == static_cast<double>(below) / sims.size());
  }
}

TEST_CASE("similarity_report: missing embeddings are listed") {
  const auto [d, e] = similarity_fixture({0.5});
  const Dataset other = make_dataset({{"a", "b"}, {"c", "d"}});
  CHECK_THROWS_WITH_AS(similarity_report(other, e), doctest::Contains("e1:chosen"), Error);
  CHECK_THROWS_AS(similarity_report(Dataset(), e), Error);
}

TEST_CASE("high_info_subset") {
  const auto [d, e] = similarity_fixture({0.1, 0.95, 0.2, 0.99, 0.3, 0.85, 0.4});
  SUBCASE("size equal to the qualifying count returns that population") {
    const Dataset s = high_info_subset(d, e, 0.8, 4, 1);
    CHECK(s.ids() == std::vector<std::string>{"e0", "e2", "e4", "e6"});
  }
  SUBCASE("same seed, same subset") {
    CHECK(high_info_subset(d, e, 0.8, 2, 9).ids() == high_info_subset(d, e, 0.8, 2, 9).ids());
  }
  SUBCASE("vacuous threshold samples from everything") {
    CHECK(high_info_subset(d, e, 1.1, 7, 3).size() == 7);
  }
  SUBCASE("insufficient pairs reports the available count") {
    CHECK_THROWS_WITH_AS(high_info_subset(d, e, 0.8, 5, 1), doctest::Contains("only 4"), Error);
  }
  SUBCASE("subset always below the threshold") {
    const std::set<std::string> qualifying = {"e0", "e2", "e4", "e6"};
    for (uint64_t seed = 0; seed < 50; ++seed) {
      for (const auto& id : high_info_subset(d, e, 0.8, 1 + seed % 4, seed).ids()) {
        CHECK(qualifying.count(id) == 1);
      }
    }
  }
}
