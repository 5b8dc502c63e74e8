#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prefaudit/bt_reward.hpp"
#include "prefaudit/dataset.hpp"
#include "prefaudit/features.hpp"

namespace prefaudit {

// Doubling ladder from ~1/64 of the data up to all of it.
inline const std::vector<double> kDefaultFractions = {0.0156, 0.03125, 0.0625,
                                                      0.125,  0.25,    0.5,
                                                      1.0};
inline constexpr double kDefaultSaturationTarget = 0.95;

struct ScalingCurve {
  std::vector<double> fractions;
  std::vector<std::size_t> sizes;
  std::vector<double> accuracy;
  uint64_t seed = 0;

  bool operator==(const ScalingCurve&) const = default;
};

void check_fractions(const std::vector<double>& fractions);

// Retrains from scratch on nested subsamples of `train_set` (one shared seed)
// and evaluates each on the same eval set.
ScalingCurve scaling_sweep(const Dataset& train_set, const Dataset& eval_set,
                           const EmbeddingTable& e,
                           const std::vector<double>& fractions,
                           const TrainConfig& cfg, uint64_t seed,
                           std::optional<FeatureSpec> spec = std::nullopt,
                           std::size_t threads = 1);

// Mean accuracy-point difference between consecutive ladder rungs. Each
// fraction must be 2x its predecessor within 1%.
double doubling_gain(const ScalingCurve& c);

struct SaturationCurve {
  std::vector<double> data_fraction;
  std::vector<double> performance_fraction;
  std::optional<double> saturation_point;  // empty when target > 1
  double target = kDefaultSaturationTarget;

  bool operator==(const SaturationCurve&) const = default;
};

SaturationCurve saturation(const ScalingCurve& c,
                           double target = kDefaultSaturationTarget);

struct InfoCompareRow {
  std::string kind;  // "high_info" | "random"
  uint64_t seed = 0;
  double accuracy = 0.0;

  bool operator==(const InfoCompareRow&) const = default;
};

struct InfoCompareResult {
  std::vector<InfoCompareRow> rows;  // high_info, random per seed
  double mean_difference = 0.0;      // mean(high_info - random)
  std::size_t subset_size = 0;
};

// Per seed: one model on a high-information sample and one on a uniform
// sample of the same size, both scored on the same eval set.
InfoCompareResult info_compare(const Dataset& train_set, const Dataset& eval_set,
                               const EmbeddingTable& e, double threshold,
                               std::size_t size, const TrainConfig& cfg,
                               const std::vector<uint64_t>& seeds,
                               std::size_t threads = 1);

// Uniform sample of `size` examples in dataset order.
Dataset random_subset(const Dataset& d, std::size_t size, uint64_t seed);

}  // namespace prefaudit
