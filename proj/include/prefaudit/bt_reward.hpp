#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefaudit/dataset.hpp"
#include "prefaudit/features.hpp"

namespace prefaudit {

// How a model's feature vectors were produced.
struct FeatureSpec {
  std::string featurizer = "external";  // "external" | "hashed-ngrams"
  std::size_t dim = 0;
  uint64_t hash_seed = 0;               // hashed-ngrams only
  std::string source;                   // embedding file, if external
  // phi(x, y) embeds prompt + "\n" + response when true, the response alone
  // otherwise.
  bool prompt_conditioned = false;

  bool operator==(const FeatureSpec&) const = default;
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 100;
  double l2 = 1e-4;
  std::optional<std::size_t> batch_size;  // nullopt: full batch
  uint64_t seed = 0;
  std::optional<std::size_t> early_stop_patience;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainMeta {
  TrainConfig config;
  double final_loss = 0.0;
  std::size_t epochs_run = 0;

  bool operator==(const TrainMeta&) const = default;
};

// Linear Bradley-Terry scorer r(x, y) = weights . phi(x, y) + bias. The bias
// cancels in every pairwise difference; it is stored for format generality.
struct RewardModel {
  std::size_t dim = 0;
  std::vector<double> weights;
  double bias = 0.0;
  FeatureSpec feature_spec;
  std::optional<TrainMeta> train_meta;

  static RewardModel zeros(FeatureSpec spec);
  bool operator==(const RewardModel&) const = default;
};

double score(const RewardModel& m, std::span<const double> x);

// sigma(z) without overflow for any finite z.
double sigmoid(double z);
// log(1 + exp(z)), stable.
double softplus(double z);

// P(chosen beats rejected) = exp(r_w) / (exp(r_w) + exp(r_l)) = sigma(r_w - r_l).
double win_probability(double r_w, double r_l);

struct FeaturePair {
  std::span<const double> chosen;
  std::span<const double> rejected;
};

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};

// loss = mean(-log sigma(delta)) + (l2/2)|w|^2 with delta = r(x_w) - r(x_l).
LossGradient loss_and_gradient(const RewardModel& m,
                               std::span<const FeaturePair> batch, double l2);

// Dense chosen/rejected feature rows for a dataset, resolved against an
// embedding table. Rows of flipped examples (meta flipped=true) read the
// opposite roles: embedding keys always name the roles as ingested.
struct PairFeatures {
  std::size_t dim = 0;
  std::vector<std::string> ids;
  std::vector<double> chosen;    // row-major, ids.size() x dim
  std::vector<double> rejected;  // row-major, ids.size() x dim

  std::size_t size() const { return ids.size(); }
  std::span<const double> chosen_row(std::size_t i) const {
    return {chosen.data() + i * dim, dim};
  }
  std::span<const double> rejected_row(std::size_t i) const {
    return {rejected.data() + i * dim, dim};
  }
};

bool is_flipped(const PreferenceExample& ex);

// Prompt-conditioned roles are used only when the table has them for
// every example.
bool has_prompt_conditioned(const Dataset& d, const EmbeddingTable& e);

PairFeatures pair_features(const Dataset& d, const EmbeddingTable& e,
                           bool prompt_conditioned);

// FeatureSpec for a table, choosing prompt conditioning automatically.
FeatureSpec describe_features(const Dataset& d, const EmbeddingTable& e,
                              std::string featurizer, std::string source,
                              uint64_t hash_seed = 0);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> eval_accuracy;
};

struct TrainResult {
  RewardModel model;
  std::vector<EpochStats> history;
  std::optional<std::size_t> best_epoch;  // set when early stopping is active
};

// Zero init, constant-step gradient descent, seeded per-epoch shuffling for
// minibatches.
TrainResult train(const Dataset& train_set, const EmbeddingTable& e,
                  const TrainConfig& cfg, const Dataset* eval_set = nullptr,
                  std::optional<FeatureSpec> spec = std::nullopt);

struct PairPrediction {
  std::string id;
  double p_win = 0.5;
  bool correct = false;  // p_win > 0.5

  bool operator==(const PairPrediction&) const = default;
};

// 1 for p > 0.5, 0.5 at exactly 0.5, 0 otherwise.
double prediction_credit(double p_win);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<PairPrediction> predictions;
};

EvalResult evaluate(const RewardModel& m, const Dataset& d,
                    const EmbeddingTable& e);

struct EcdfPoint {
  double value = 0.0;
  double cumulative_fraction = 0.0;
};

// ECDF of p_win sampled at `grid` evenly spaced points over [0, 1].
std::vector<EcdfPoint> probability_ecdf(std::span<const PairPrediction> predictions,
                                        std::size_t grid);

// mean |p_win - 0.5|
double concentration(std::span<const PairPrediction> predictions);

}  // namespace prefaudit
