#include "prefaudit/curves.hpp"

#include <cmath>

#include "prefaudit/error.hpp"
#include "prefaudit/hashing.hpp"
#include "prefaudit/parallel.hpp"

namespace prefaudit {

namespace {

constexpr double kLadderTolerance = 0.01;

// Random-arm samples use a stream distinct from the high-information arm.
constexpr uint64_t kRandomArmSalt = 0x52616e646f6d4172ULL;

}  // namespace

void check_fractions(const std::vector<double>& fractions) {
  if (fractions.empty()) throw Error("invalid_argument", "no fractions given");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) {
      throw Error("invalid_argument", "fractions must lie in (0, 1]");
    }
    if (i > 0 && !(fractions[i] > fractions[i - 1])) {
      throw Error("invalid_argument", "fractions must be strictly ascending");
    }
  }
}

ScalingCurve scaling_sweep(const Dataset& train_set, const Dataset& eval_set,
                           const EmbeddingTable& e,
                           const std::vector<double>& fractions,
                           const TrainConfig& cfg, uint64_t seed,
                           std::optional<FeatureSpec> spec, std::size_t threads) {
  check_fractions(fractions);
  const FeatureSpec features =
      spec ? *spec : describe_features(train_set, e, "external", "");

  ScalingCurve curve;
  curve.fractions = fractions;
  curve.seed = seed;
  curve.sizes.resize(fractions.size());
  curve.accuracy.resize(fractions.size());
  parallel_for(fractions.size(), threads, [&](std::size_t i) {
    const Dataset subset = subsample(train_set, fractions[i], seed);
    TrainConfig point_cfg = cfg;
    if (point_cfg.batch_size && *point_cfg.batch_size > subset.size()) {
      point_cfg.batch_size = subset.size();
    }
    const Dataset* monitor = cfg.early_stop_patience ? &eval_set : nullptr;
    const TrainResult trained = train(subset, e, point_cfg, monitor, features);
    curve.sizes[i] = subset.size();
    curve.accuracy[i] = evaluate(trained.model, eval_set, e).accuracy;
  });
  return curve;
}

double doubling_gain(const ScalingCurve& c) {
  if (c.fractions.size() < 2 || c.accuracy.size() != c.fractions.size()) {
    throw Error("doubling_gain", "need at least two curve points");
  }
  double total = 0.0;
  for (std::size_t i = 1; i < c.fractions.size(); ++i) {
    const double ratio = c.fractions[i] / c.fractions[i - 1];
    if (std::abs(ratio / 2.0 - 1.0) > kLadderTolerance) {
      throw Error("doubling_gain", "fractions " + std::to_string(c.fractions[i - 1]) +
                                       " -> " + std::to_string(c.fractions[i]) +
                                       " are not a doubling");
    }
    total += c.accuracy[i] - c.accuracy[i - 1];
  }
  return total / static_cast<double>(c.fractions.size() - 1);
}

SaturationCurve saturation(const ScalingCurve& c, double target) {
  std::optional<std::size_t> full;
  for (std::size_t i = 0; i < c.fractions.size(); ++i) {
    if (c.fractions[i] == 1.0) full = i;
  }
  if (!full) throw Error("saturation", "curve has no full-data (fraction 1.0) point");
  const double reference = c.accuracy[*full];
  if (!(reference > 0.0)) {
    throw Error("saturation", "full-data accuracy must be positive");
  }

  SaturationCurve out;
  out.target = target;
  out.data_fraction = c.fractions;
  for (std::size_t i = 0; i < c.fractions.size(); ++i) {
    const double perf = i == *full ? 1.0 : c.accuracy[i] / reference;
    out.performance_fraction.push_back(perf);
    if (!out.saturation_point && perf >= target) out.saturation_point = c.fractions[i];
  }
  return out;
}

Dataset random_subset(const Dataset& d, std::size_t size, uint64_t seed) {
  if (size > d.size()) {
    throw Error("invalid_argument", "random subset of " + std::to_string(size) +
                                        " from " + std::to_string(d.size()) +
                                        " examples");
  }
  return select(d, sample_indices(d.size(), size, splitmix64(seed ^ kRandomArmSalt)),
                kSubsampleRule);
}

InfoCompareResult info_compare(const Dataset& train_set, const Dataset& eval_set,
                               const EmbeddingTable& e, double threshold,
                               std::size_t size, const TrainConfig& cfg,
                               const std::vector<uint64_t>& seeds,
                               std::size_t threads) {
  if (seeds.empty()) throw Error("invalid_argument", "info_compare needs seeds");
  if (size == 0 || size > train_set.size()) {
    throw Error("invalid_argument", "subset size must lie in [1, |train|]");
  }
  const FeatureSpec features = describe_features(train_set, e, "external", "");
  TrainConfig arm_cfg = cfg;
  if (arm_cfg.batch_size && *arm_cfg.batch_size > size) arm_cfg.batch_size = size;

  InfoCompareResult out;
  out.subset_size = size;
  out.rows.resize(2 * seeds.size());
  parallel_for(2 * seeds.size(), threads, [&](std::size_t task) {
    const uint64_t seed = seeds[task / 2];
    const bool high = task % 2 == 0;
    const Dataset subset = high ? high_info_subset(train_set, e, threshold, size, seed)
                                : random_subset(train_set, size, seed);
    const TrainResult trained = train(subset, e, arm_cfg, nullptr, features);
    out.rows[task] = {high ? "high_info" : "random", seed,
                      evaluate(trained.model, eval_set, e).accuracy};
  });
  double diff = 0.0;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    diff += out.rows[2 * s].accuracy - out.rows[2 * s + 1].accuracy;
  }
  out.mean_difference = diff / static_cast<double>(seeds.size());
  return out;
}

}  // namespace prefaudit
