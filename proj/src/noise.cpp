#include "prefaudit/noise.hpp"

#include <algorithm>
#include <cmath>

#include "prefaudit/error.hpp"
#include "prefaudit/hashing.hpp"
#include "prefaudit/parallel.hpp"

namespace prefaudit {

namespace {

void check_spec(const NoiseSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) {
    throw Error("invalid_argument", "noise rate must lie in [0, 1]");
  }
}

}  // namespace

bool flip_decision(const NoiseSpec& spec, const std::string& id) {
  return unit_interval(keyed_hash(spec.seed, HashSalt::kFlip, id)) < spec.rate;
}

std::size_t count_flips(const Dataset& d, const NoiseSpec& spec) {
  check_spec(spec);
  return static_cast<std::size_t>(
      std::count_if(d.examples().begin(), d.examples().end(),
                    [&](const PreferenceExample& ex) { return flip_decision(spec, ex.id); }));
}

Dataset flip_labels(const Dataset& d, const NoiseSpec& spec) {
  check_spec(spec);
  std::vector<PreferenceExample> out = d.examples();
  for (auto& ex : out) {
    if (!flip_decision(spec, ex.id)) continue;
    std::swap(ex.chosen, ex.rejected);
    if (is_flipped(ex)) {
      ex.meta.erase("flipped");
    } else {
      ex.meta["flipped"] = "true";
    }
  }
  return Dataset(std::move(out), d.provenance());
}

void check_sweep_rates(const std::vector<double>& rates) {
  if (rates.empty()) throw Error("invalid_argument", "noise sweep needs at least one rate");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!(rates[i] >= 0.0 && rates[i] <= kMaxSweepRate)) {
      throw Error("invalid_argument", "sweep noise rates must lie in [0, 0.5]");
    }
    if (i > 0 && !(rates[i] > rates[i - 1])) {
      throw Error("invalid_argument", "sweep noise rates must be strictly ascending");
    }
  }
}

std::vector<NoisePoint> run_noise_points(const Dataset& train_set,
                                         const Dataset& eval_set,
                                         const EmbeddingTable& e,
                                         const std::vector<double>& rates,
                                         const TrainConfig& cfg, uint64_t seed,
                                         const FeatureSpec& spec,
                                         std::size_t threads) {
  check_sweep_rates(rates);
  std::vector<NoisePoint> points(rates.size());
  parallel_for(rates.size(), threads, [&](std::size_t i) {
    const NoiseSpec noise{rates[i], seed};
    const Dataset noisy = flip_labels(train_set, noise);
    const Dataset* monitor = cfg.early_stop_patience ? &eval_set : nullptr;
    const TrainResult trained = train(noisy, e, cfg, monitor, spec);
    points[i] = NoisePoint{rates[i], count_flips(train_set, noise),
                           evaluate(trained.model, eval_set, e)};
  });
  return points;
}

NoiseSweepResult summarize_noise(const std::vector<NoisePoint>& points) {
  NoiseSweepResult r;
  for (const auto& p : points) {
    r.rates.push_back(p.rate);
    r.accuracy.push_back(p.eval.accuracy);
    r.concentration.push_back(concentration(p.eval.predictions));
    r.flip_counts.push_back(p.flips);
  }
  const double peak = *std::max_element(r.accuracy.begin(), r.accuracy.end());
  if (!(peak > 0.0)) {
    throw Error("noise_sweep", "peak accuracy is zero; invariance score undefined");
  }
  for (double acc : r.accuracy) r.invariance_score.push_back(acc / peak);
  return r;
}

NoiseSweepResult noise_sweep(const Dataset& train_set, const Dataset& eval_set,
                             const EmbeddingTable& e,
                             const std::vector<double>& rates,
                             const TrainConfig& cfg, uint64_t seed,
                             std::size_t threads) {
  const FeatureSpec spec = describe_features(train_set, e, "external", "");
  return summarize_noise(
      run_noise_points(train_set, eval_set, e, rates, cfg, seed, spec, threads));
}

}  // namespace prefaudit
