#include "prefaudit/bt_reward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "prefaudit/error.hpp"
#include "prefaudit/hashing.hpp"

namespace prefaudit {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double squared_norm(std::span<const double> v) { return dot(v, v); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Pairwise objective over difference rows x_w - x_l (the bias cancels).
// Terms are accumulated as softplus(-delta) - ln 2.
struct Objective {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<double> grad;
};

Objective pairwise_objective(std::span<const double> weights,
                             std::span<const double> diffs, std::size_t dim,
                             std::span<const std::size_t> rows, double l2,
                             bool want_grad) {
  Objective out;
  if (want_grad) out.grad.assign(dim, 0.0);
  double centered = 0.0;
  double credit = 0.0;
  for (std::size_t r : rows) {
    const std::span<const double> row = diffs.subspan(r * dim, dim);
    const double delta = dot(weights, row);
    centered += softplus(-delta) - std::numbers::ln2;
    credit += prediction_credit(sigmoid(delta));
    if (want_grad) {
      const double coeff = -sigmoid(-delta);
      for (std::size_t j = 0; j < dim; ++j) out.grad[j] += coeff * row[j];
    }
  }
  const auto n = static_cast<double>(rows.size());
  out.loss = std::numbers::ln2 + centered / n + 0.5 * l2 * squared_norm(weights);
  out.accuracy = credit / n;
  if (want_grad) {
    for (std::size_t j = 0; j < dim; ++j) {
      out.grad[j] = out.grad[j] / n + l2 * weights[j];
    }
  }
  return out;
}

std::vector<double> difference_rows(const PairFeatures& f) {
  std::vector<double> diffs(f.chosen.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    diffs[i] = f.chosen[i] - f.rejected[i];
  }
  return diffs;
}

std::vector<PairPrediction> predict(const RewardModel& m, const PairFeatures& f) {
  std::vector<PairPrediction> out;
  out.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double p =
        win_probability(score(m, f.chosen_row(i)), score(m, f.rejected_row(i)));
    out.push_back({f.ids[i], p, p > 0.5});
  }
  return out;
}

double mean_credit(std::span<const PairPrediction> predictions) {
  double credit = 0.0;
  for (const auto& p : predictions) credit += prediction_credit(p.p_win);
  return credit / static_cast<double>(predictions.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error("config", "learning_rate must be a positive finite number");
  }
  if (!(l2 >= 0.0) || !std::isfinite(l2)) {
    throw Error("config", "l2 must be a nonnegative finite number");
  }
  if (batch_size && *batch_size == 0) {
    throw Error("config", "batch_size must be positive");
  }
  if (early_stop_patience && *early_stop_patience == 0) {
    throw Error("config", "early_stop_patience must be positive");
  }
}

RewardModel RewardModel::zeros(FeatureSpec spec) {
  RewardModel m;
  m.dim = spec.dim;
  m.weights.assign(spec.dim, 0.0);
  m.feature_spec = std::move(spec);
  return m;
}

double score(const RewardModel& m, std::span<const double> x) {
  if (x.size() != m.dim || m.weights.size() != m.dim) {
    throw Error("dimension", "score: feature length " + std::to_string(x.size()) +
                                 " does not match model dim " +
                                 std::to_string(m.dim));
  }
  return dot(m.weights, x) + m.bias;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double win_probability(double r_w, double r_l) { return sigmoid(r_w - r_l); }

LossGradient loss_and_gradient(const RewardModel& m,
                               std::span<const FeaturePair> batch, double l2) {
  if (batch.empty()) throw Error("invalid_argument", "loss_and_gradient: empty batch");
  if (m.weights.size() != m.dim) {
    throw Error("dimension", "model weights do not match its dim");
  }
  std::vector<double> diffs;
  diffs.reserve(batch.size() * m.dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& pair = batch[i];
    if (pair.chosen.size() != m.dim || pair.rejected.size() != m.dim) {
      throw Error("dimension", "loss_and_gradient: pair " + std::to_string(i) +
                                   " does not have dimension " +
                                   std::to_string(m.dim));
    }
    if (!all_finite(pair.chosen) || !all_finite(pair.rejected)) {
      throw Error("non_finite", "loss_and_gradient: pair " + std::to_string(i) +
                                    " has non-finite features");
    }
    for (std::size_t j = 0; j < m.dim; ++j) {
      diffs.push_back(pair.chosen[j] - pair.rejected[j]);
    }
  }
  std::vector<std::size_t> rows(batch.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Objective obj = pairwise_objective(m.weights, diffs, m.dim, rows, l2, true);
  return {obj.loss, std::move(obj.grad), 0.0};
}

bool is_flipped(const PreferenceExample& ex) {
  auto it = ex.meta.find("flipped");
  return it != ex.meta.end() && it->second == "true";
}

bool has_prompt_conditioned(const Dataset& d, const EmbeddingTable& e) {
  if (d.empty()) return false;
  return std::all_of(d.examples().begin(), d.examples().end(),
                     [&](const PreferenceExample& ex) {
                       return e.contains(ex.id, Role::kPromptChosen) &&
                              e.contains(ex.id, Role::kPromptRejected);
                     });
}

PairFeatures pair_features(const Dataset& d, const EmbeddingTable& e,
                           bool prompt_conditioned) {
  const Role first = prompt_conditioned ? Role::kPromptChosen : Role::kChosen;
  const Role second = prompt_conditioned ? Role::kPromptRejected : Role::kRejected;

  PairFeatures f;
  f.dim = e.dim();
  f.ids.reserve(d.size());
  f.chosen.reserve(d.size() * e.dim());
  f.rejected.reserve(d.size() * e.dim());
  std::vector<std::string> missing;
  for (const auto& ex : d.examples()) {
    const bool flipped = is_flipped(ex);
    const Role chosen_role = flipped ? second : first;
    const Role rejected_role = flipped ? first : second;
    const auto* chosen = e.find(ex.id, chosen_role);
    const auto* rejected = e.find(ex.id, rejected_role);
    if (!chosen) missing.push_back(embedding_key(ex.id, chosen_role));
    if (!rejected) missing.push_back(embedding_key(ex.id, rejected_role));
    if (!chosen || !rejected) continue;
    f.ids.push_back(ex.id);
    f.chosen.insert(f.chosen.end(), chosen->begin(), chosen->end());
    f.rejected.insert(f.rejected.end(), rejected->begin(), rejected->end());
  }
  if (!missing.empty()) {
    std::string msg = "missing embeddings for " + std::to_string(missing.size()) +
                      " key(s):";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ...";
    throw Error("embedding", msg);
  }
  return f;
}

FeatureSpec describe_features(const Dataset& d, const EmbeddingTable& e,
                              std::string featurizer, std::string source,
                              uint64_t hash_seed) {
  FeatureSpec spec;
  spec.featurizer = std::move(featurizer);
  spec.dim = e.dim();
  spec.hash_seed = hash_seed;
  spec.source = std::move(source);
  spec.prompt_conditioned = has_prompt_conditioned(d, e);
  return spec;
}

double prediction_credit(double p_win) {
  if (p_win > 0.5) return 1.0;
  if (p_win == 0.5) return 0.5;
  return 0.0;
}

TrainResult train(const Dataset& train_set, const EmbeddingTable& e,
                  const TrainConfig& cfg, const Dataset* eval_set,
                  std::optional<FeatureSpec> spec) {
  cfg.validate();
  if (train_set.empty()) throw Error("train", "empty training set");
  FeatureSpec features =
      spec ? *spec : describe_features(train_set, e, "external", "");
  if (features.dim != e.dim()) {
    throw Error("dimension", "feature spec dim " + std::to_string(features.dim) +
                                 " does not match embedding dim " +
                                 std::to_string(e.dim()));
  }
  if (cfg.batch_size && *cfg.batch_size > train_set.size()) {
    throw Error("config", "batch_size " + std::to_string(*cfg.batch_size) +
                              " exceeds training set size " +
                              std::to_string(train_set.size()));
  }

  const PairFeatures train_pairs =
      pair_features(train_set, e, features.prompt_conditioned);
  std::optional<PairFeatures> eval_pairs;
  if (eval_set && !eval_set->empty()) {
    eval_pairs = pair_features(*eval_set, e, features.prompt_conditioned);
  }
  const std::size_t dim = e.dim();
  const std::size_t n = train_pairs.size();
  const std::vector<double> diffs = difference_rows(train_pairs);

  TrainResult result;
  result.model = RewardModel::zeros(features);
  std::vector<double>& w = result.model.weights;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = cfg.batch_size.value_or(n);
  const bool full_batch = batch >= n;
  std::mt19937_64 rng(cfg.seed);

  const bool early_stop = cfg.early_stop_patience.has_value() && eval_pairs;
  double best_eval = -1.0;
  std::size_t since_best = 0;
  std::vector<double> best_weights;

  Objective state = pairwise_objective(w, diffs, dim, order, cfg.l2, full_batch);
  double final_loss = state.loss;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (full_batch) {
      for (std::size_t j = 0; j < dim; ++j) w[j] -= cfg.learning_rate * state.grad[j];
      state = pairwise_objective(w, diffs, dim, order, cfg.l2, true);
    } else {
      seeded_shuffle(order, rng);
      for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t stop = std::min(n, start + batch);
        const std::span<const std::size_t> rows(order.data() + start, stop - start);
        const Objective step = pairwise_objective(w, diffs, dim, rows, cfg.l2, true);
        for (std::size_t j = 0; j < dim; ++j) w[j] -= cfg.learning_rate * step.grad[j];
      }
      state = pairwise_objective(w, diffs, dim, order, cfg.l2, false);
    }
    if (!std::isfinite(state.loss) || !all_finite(w)) {
      throw Error("divergence", "training loss became non-finite at epoch " +
                                    std::to_string(epoch));
    }
    final_loss = state.loss;

    EpochStats stats{epoch, state.loss, state.accuracy, std::nullopt};
    if (eval_pairs) stats.eval_accuracy = mean_credit(predict(result.model, *eval_pairs));
    result.history.push_back(stats);

    if (early_stop) {
      if (*stats.eval_accuracy > best_eval) {
        best_eval = *stats.eval_accuracy;
        best_weights = w;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= *cfg.early_stop_patience) {
        break;
      }
    }
  }

  if (early_stop && result.best_epoch) {
    w = best_weights;
    final_loss = result.history[*result.best_epoch - 1].loss;
  }
  result.model.train_meta = TrainMeta{cfg, final_loss, result.history.size()};
  return result;
}

EvalResult evaluate(const RewardModel& m, const Dataset& d,
                    const EmbeddingTable& e) {
  if (d.empty()) throw Error("evaluate", "empty evaluation set");
  if (m.dim != e.dim()) {
    throw Error("dimension", "model dim " + std::to_string(m.dim) +
                                 " does not match embedding dim " +
                                 std::to_string(e.dim()));
  }
  EvalResult out;
  out.predictions = predict(m, pair_features(d, e, m.feature_spec.prompt_conditioned));
  out.accuracy = mean_credit(out.predictions);
  return out;
}

std::vector<EcdfPoint> probability_ecdf(std::span<const PairPrediction> predictions,
                                        std::size_t grid) {
  if (predictions.empty()) throw Error("invalid_argument", "ECDF of no predictions");
  if (grid < 2) throw Error("invalid_argument", "ECDF grid must have >= 2 points");
  std::vector<double> sorted;
  sorted.reserve(predictions.size());
  for (const auto& p : predictions) sorted.push_back(p.p_win);
  std::sort(sorted.begin(), sorted.end());

  std::vector<EcdfPoint> out;
  out.reserve(grid);
  const auto n = static_cast<double>(sorted.size());
  for (std::size_t k = 0; k < grid; ++k) {
    const double v = static_cast<double>(k) / static_cast<double>(grid - 1);
    const auto at_or_below = std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
    double frac = static_cast<double>(at_or_below) / n;
    // p_win lies in [0, 1], so the last grid point always covers everything.
    if (k + 1 == grid) frac = 1.0;
    out.push_back({v, frac});
  }
  return out;
}

double concentration(std::span<const PairPrediction> predictions) {
  if (predictions.empty()) {
    throw Error("invalid_argument", "concentration of no predictions");
  }
  double sum = 0.0;
  for (const auto& p : predictions) sum += std::abs(p.p_win - 0.5);
  return sum / static_cast<double>(predictions.size());
}

}  // namespace prefaudit
