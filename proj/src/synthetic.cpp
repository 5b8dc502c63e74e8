#include "prefaudit/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "prefaudit/bt_reward.hpp"
#include "prefaudit/error.hpp"
#include "prefaudit/hashing.hpp"

namespace prefaudit {

double NormalStream::uniform() {
  state_ += 0x9e3779b97f4a7c15ULL;
  // Centre of a 2^-53 cell: never 0 or 1.
  return (static_cast<double>(splitmix64(state_) >> 11) + 0.5) * 0x1.0p-53;
}

double NormalStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::vector<double> random_unit_direction(std::size_t dim, uint64_t seed,
                                          double norm) {
  NormalStream rng(splitmix64(seed ^ 0x5773746172ULL));
  std::vector<double> w(dim);
  double sq = 0.0;
  for (double& x : w) {
    x = rng.normal();
    sq += x * x;
  }
  const double scale = norm / std::sqrt(sq);
  for (double& x : w) x *= scale;
  return w;
}

namespace {

std::string describe_vector(const std::vector<double>& v, const char* lead) {
  std::string text = lead;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j] > 0.5) text += " up" + std::to_string(j);
    if (v[j] < -0.5) text += " down" + std::to_string(j);
  }
  return text;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticSpec& spec,
                             const std::vector<double>& w_star) {
  if (spec.dim == 0 || w_star.size() != spec.dim) {
    throw Error("invalid_argument", "synthetic: w* must have length dim >= 1");
  }
  NormalStream rng(spec.seed);
  std::vector<PreferenceExample> examples;
  examples.reserve(spec.n);
  EmbeddingTable table(spec.dim);

  auto draw = [&] {
    std::vector<double> v(spec.dim);
    for (double& x : v) x = rng.normal();
    return v;
  };

  for (std::size_t i = 0; i < spec.n; ++i) {
    std::vector<double> a, b;
    double margin = 0.0;
    for (std::size_t attempt = 0;; ++attempt) {
      a = draw();
      if (spec.similarity_correlated) {
        const double t = rng.uniform();
        const double keep = std::sqrt(1.0 - t * t);
        b = draw();
        for (std::size_t j = 0; j < spec.dim; ++j) b[j] = keep * a[j] + t * b[j];
      } else {
        b = draw();
      }
      margin = dot(w_star, a) - dot(w_star, b);
      if (spec.labels != SyntheticLabels::kSeparable || std::abs(margin) >= 1.0) break;
      if (attempt > 10000) {
        throw Error("synthetic", "cannot draw separable pairs with margin >= 1; "
                                 "increase weight_norm");
      }
    }
    bool a_wins;
    if (spec.labels == SyntheticLabels::kSeparable) {
      a_wins = margin > 0.0;
    } else {
      a_wins = rng.uniform() < sigmoid(margin);
    }
    const std::vector<double>& chosen = a_wins ? a : b;
    const std::vector<double>& rejected = a_wins ? b : a;

    PreferenceExample ex;
    ex.id = spec.id_prefix + std::to_string(i);
    ex.prompt = "question " + ex.id;
    ex.chosen = describe_vector(chosen, "answer");
    ex.rejected = describe_vector(rejected, "reply");
    table.insert(embedding_key(ex.id, Role::kChosen), chosen);
    table.insert(embedding_key(ex.id, Role::kRejected), rejected);
    examples.push_back(std::move(ex));
  }

  FilterLog log;
  log.ingested = spec.n;
  return {Dataset(std::move(examples), Provenance{"synthetic", log}), std::move(table),
          w_star};
}

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  return make_synthetic(spec, random_unit_direction(spec.dim, spec.seed, spec.weight_norm));
}

SyntheticData merge_synthetic(const SyntheticData& a, const SyntheticData& b) {
  if (a.embeddings.dim() != b.embeddings.dim()) {
    throw Error("invalid_argument", "merge_synthetic: dimension mismatch");
  }
  std::vector<PreferenceExample> examples = a.data.examples();
  examples.insert(examples.end(), b.data.examples().begin(), b.data.examples().end());
  EmbeddingTable table(a.embeddings.dim());
  for (const auto* src : {&a.embeddings, &b.embeddings}) {
    for (const auto& key : src->keys()) table.insert(key, *src->find_key(key));
  }
  FilterLog log;
  log.ingested = examples.size();
  return {Dataset(std::move(examples), Provenance{"synthetic", log}), std::move(table),
          a.w_star};
}

}  // namespace prefaudit
