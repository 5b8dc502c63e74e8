#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "prefaudit/bt_reward.hpp"
#include "prefaudit/dataset.hpp"
#include "prefaudit/features.hpp"

namespace prefaudit {

struct NoiseSpec {
  double rate = 0.0;  // in [0, 1]
  uint64_t seed = 0;
};

// Per-id Bernoulli(rate) decision from a keyed hash, so decisions do not
// depend on dataset order or membership, and the flip set at a lower rate is
// contained in the flip set at a higher rate.
bool flip_decision(const NoiseSpec& spec, const std::string& id);
std::size_t count_flips(const Dataset& d, const NoiseSpec& spec);

// Swaps chosen and rejected of every selected example and toggles
// meta["flipped"]; at rate 1 applying it twice restores the input exactly.
Dataset flip_labels(const Dataset& d, const NoiseSpec& spec);

inline const std::vector<double> kDefaultNoiseRates = {0.0, 0.1, 0.2, 0.3, 0.4};
inline constexpr double kMaxSweepRate = 0.5;

// Validates a sweep's rate list: nonempty, ascending, each in [0, 0.5].
void check_sweep_rates(const std::vector<double>& rates);

// One trained-and-evaluated sweep point.
struct NoisePoint {
  double rate = 0.0;
  std::size_t flips = 0;
  EvalResult eval;
};

// Trains on flip_labels(train, {rate, seed}) per rate and evaluates on the
// untouched eval set. Points are independent and may run on `threads`
// workers; results are in rate order.
std::vector<NoisePoint> run_noise_points(const Dataset& train_set,
                                         const Dataset& eval_set,
                                         const EmbeddingTable& e,
                                         const std::vector<double>& rates,
                                         const TrainConfig& cfg, uint64_t seed,
                                         const FeatureSpec& spec,
                                         std::size_t threads = 1);

struct NoiseSweepResult {
  std::vector<double> rates;
  std::vector<double> accuracy;
  std::vector<double> concentration;
  std::vector<double> invariance_score;  // accuracy / max accuracy
  std::vector<std::size_t> flip_counts;

  bool operator==(const NoiseSweepResult&) const = default;
};

NoiseSweepResult summarize_noise(const std::vector<NoisePoint>& points);

NoiseSweepResult noise_sweep(const Dataset& train_set, const Dataset& eval_set,
                             const EmbeddingTable& e,
                             const std::vector<double>& rates,
                             const TrainConfig& cfg, uint64_t seed,
                             std::size_t threads = 1);

}  // namespace prefaudit
