// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "prefaudit/bt_reward.hpp"
#include "prefaudit/calibration.hpp"
#include "prefaudit/curves.hpp"
#include "prefaudit/features.hpp"
#include "prefaudit/noise.hpp"
#include "prefaudit/serialize.hpp"
#include "prefaudit/synthetic.hpp"
#include "test_support.hpp"

using namespace prefaudit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::string fmt(const char* pattern, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

std::string fmt(const char* pattern, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

std::vector<double> gaussian(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

RewardModel linear_model(std::vector<double> w) {
  RewardModel m;
  m.dim = w.size();
  m.weights = std::move(w);
  m.feature_spec.dim = m.dim;
  return m;
}

std::vector<PairPrediction> predictions(const std::vector<double>& ps) {
  std::vector<PairPrediction> out;
  for (std::size_t i = 0; i < ps.size(); ++i) out.push_back({"p" + std::to_string(i), ps[i], ps[i] > 0.5});
  return out;
}

struct Synthetic {
  SyntheticData train;
  SyntheticData eval;
  SyntheticData all;
};

Synthetic bt_population(std::size_t n_train, std::size_t n_eval, std::size_t dim, double weight_norm,
                        uint64_t seed) {
  Synthetic s;
  s.train = make_synthetic({.n = n_train, .dim = dim, .seed = seed, .weight_norm = weight_norm});
  s.eval = make_synthetic(
      {.n = n_eval, .dim = dim, .seed = seed + 1000, .weight_norm = weight_norm, .id_prefix = "v"},
      s.train.w_star);
  s.all = merge_synthetic(s.train, s.eval);
  return s;
}

// ---------------------------------------------------------------------------

Outcome gradient_oracle() {
  Outcome o;
  std::mt19937_64 rng(101);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng() % 16, n = 1 + rng() % 8;
    const double l2 = (trial % 3 == 0) ? 0.0 : 0.05 * (trial % 3);
    std::vector<std::vector<double>> xw, xl;
    std::vector<FeaturePair> batch;
    for (std::size_t i = 0; i < n; ++i) {
      xw.push_back(gaussian(rng, dim));
      xl.push_back(gaussian(rng, dim));
    }
    for (std::size_t i = 0; i < n; ++i) batch.push_back({xw[i], xl[i]});
    const auto w = gaussian(rng, dim, 0.5);
    const LossGradient lg = loss_and_gradient(linear_model(w), batch, l2);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      auto wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd =
          (testing::naive_bt_loss(wp, xw, xl, l2) - testing::naive_bt_loss(wm, xw, xl, l2)) / (2 * h);
      num += (fd - lg.grad_w[j]) * (fd - lg.grad_w[j]);
      den += fd * fd;
    }
    const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
    worst = std::max(worst, rel);
    o.require(lg.grad_b == 0.0, "bias gradient nonzero");
  }
  o.require(worst < 1e-5, fmt("max relative error %.3g", worst));
  if (o.ok) o.detail = fmt("max relative error %.3g over 100 instances", worst);
  return o;
}

Outcome bt_exactness() {
  Outcome o;
  const double p = win_probability(std::log(3.0), 0.0);
  o.require(std::abs(p - 0.75) <= 1e-12, fmt("sigma(ln 3) = %.17g", p));
  std::mt19937_64 rng(102);
  double worst_anti = 0.0, worst_shift = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto r = gaussian(rng, 3, 10.0);
    worst_anti = std::max(worst_anti,
                          std::abs(win_probability(r[0], r[1]) + win_probability(r[1], r[0]) - 1.0));
    worst_shift = std::max(worst_shift, std::abs(win_probability(r[0] + r[2], r[1] + r[2]) -
                                                 win_probability(r[0], r[1])));
  }
  o.require(worst_anti <= 1e-12, fmt("antisymmetry error %.3g", worst_anti));
  o.require(worst_shift <= 1e-12, fmt("translation error %.3g", worst_shift));
  if (o.ok) o.detail = fmt("antisymmetry %.2g, translation %.2g", worst_anti, worst_shift);
  return o;
}

Outcome zero_model_baselines() {
  Outcome o;
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 1 + rng() % 32, n = 1 + rng() % 64;
    std::vector<std::vector<double>> xw, xl;
    for (std::size_t i = 0; i < n; ++i) {
      xw.push_back(gaussian(rng, dim, 5.0));
      xl.push_back(gaussian(rng, dim, 5.0));
    }
    std::vector<FeaturePair> batch;
    for (std::size_t i = 0; i < n; ++i) batch.push_back({xw[i], xl[i]});
    const double loss = loss_and_gradient(RewardModel::zeros({"external", dim}), batch, 0.1).loss;
    o.require(loss == std::numbers::ln2, fmt("zero-model loss %.17g", loss));
  }
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = make_synthetic({.n = 200 + 50 * seed, .dim = 4 + seed, .seed = seed});
    const double acc = evaluate(RewardModel::zeros({"external", 4 + seed}), s.data, s.embeddings).accuracy;
    o.require(acc == 0.5, fmt("zero-model accuracy %.17g", acc));
    const EmbeddingTable hashed = hash_featurize(s.data, 64, seed);
    const double hacc = evaluate(RewardModel::zeros({"hashed-ngrams", 64}), s.data, hashed).accuracy;
    o.require(hacc == 0.5, fmt("zero-model accuracy (hashed) %.17g", hacc));
  }
  if (o.ok) o.detail = "loss = ln 2 on 50 batches, accuracy = 0.5 on 10 datasets";
  return o;
}

Outcome flip_statistics() {
  Outcome o;
  std::vector<PreferenceExample> ex;
  for (std::size_t i = 0; i < 10000; ++i) {
    ex.push_back({"pair-" + std::to_string(i), "p", "w" + std::to_string(i), "l" + std::to_string(i), {}});
  }
  FilterLog log;
  log.ingested = ex.size();
  const Dataset d(std::move(ex), {"mem", log});

  const std::size_t flips = count_flips(d, {0.3, 7});
  o.require(flips >= 3000 - 137 && flips <= 3000 + 137, fmt("%.0f flips at p=0.3", flips));
  o.require(flip_labels(d, {0.0, 7}) == d, "p=0 changed the dataset");
  const Dataset once = flip_labels(d, {1.0, 7});
  bool all_swapped = true;
  for (std::size_t i = 0; i < d.size(); ++i) {
    all_swapped &= once[i].chosen == d[i].rejected && once[i].rejected == d[i].chosen;
  }
  o.require(all_swapped, "p=1 left a pair unswapped");
  o.require(flip_labels(once, {1.0, 7}) == d, "p=1 applied twice is not the identity");

  std::set<std::string> prev;
  for (double rate : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0}) {
    std::set<std::string> cur;
    for (const auto& e : d.examples()) {
      if (flip_decision({rate, 7}, e.id)) cur.insert(e.id);
    }
    o.require(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()),
              fmt("flip set at p=%.2f does not contain the previous one", rate));
    prev = std::move(cur);
  }
  if (o.ok) o.detail = fmt("%.0f flips at p=0.3 (bound 3000 +/- 137)", flips);
  return o;
}

Outcome ece_oracle() {
  Outcome o;
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int set = 0; set < 50; ++set) {
    std::vector<double> ps(1 + rng() % 500);
    for (auto& p : ps) {
      p = u(rng);
      if (rng() % 8 == 0) p = static_cast<double>(rng() % 31) / 30.0;
    }
    const auto records = z_split(predictions(ps));
    std::vector<testing::OracleRecord> plain;
    for (const auto& r : records) plain.push_back({r.p_first_wins, r.z});
    for (std::size_t m : {1, 5, 10, 15}) {
      worst = std::max(worst, std::abs(ece(records, m).ece - testing::brute_force_ece(plain, m)));
    }
  }
  o.require(worst <= 1e-12, fmt("max |ece - oracle| = %.3g", worst));
  for (std::size_t m : {1, 5, 10, 15}) {
    const double e = ece(z_split(predictions(std::vector<double>(101, 0.5))), m).ece;
    o.require(e == 0.0, fmt("constant 0.5 predictor ECE %.3g", e));
  }
  if (o.ok) o.detail = fmt("max |ece - oracle| = %.2g over 200 comparisons", worst);
  return o;
}

Outcome z_split_structure() {
  Outcome o;
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> ps(1 + rng() % 300);
    for (auto& p : ps) p = u(rng);
    const auto records = z_split(predictions(ps));
    o.require(records.size() == 2 * ps.size(), "record count is not 2n");
    std::size_t ones = 0;
    std::multiset<double> probs;
    for (const auto& r : records) {
      ones += static_cast<std::size_t>(r.z);
      probs.insert(r.p_first_wins);
    }
    o.require(2 * ones == records.size(), "label mean is not 0.5");
    for (double q : probs) {
      const auto it = probs.find(1.0 - q);
      o.require(it != probs.end(), fmt("probability %.17g has no mirror", q));
    }
  }
  if (o.ok) o.detail = "50 random prediction sets";
  return o;
}

struct NoiseRuns {
  std::vector<NoiseSweepResult> sweeps;
};

NoiseRuns noise_runs() {
  NoiseRuns runs;
  for (uint64_t seed = 0; seed < 3; ++seed) {
    const Synthetic s = bt_population(5000, 2000, 16, 2.0, seed);
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.epochs = 200;
    runs.sweeps.push_back(
        noise_sweep(s.train.data, s.eval.data, s.all.embeddings, kDefaultNoiseRates, cfg, seed));
  }
  return runs;
}

Outcome noise_concentration(const NoiseRuns& runs) {
  Outcome o;
  std::string summary;
  for (std::size_t k = 0; k < runs.sweeps.size(); ++k) {
    const auto& c = runs.sweeps[k].concentration;
    for (std::size_t i = 1; i < c.size(); ++i) {
      o.require(c[i] <= c[i - 1] + 1e-3,
                fmt("seed %.0f: concentration rises at rate index %.0f", static_cast<double>(k),
                    static_cast<double>(i)));
    }
    summary += (k ? "; " : "") + fmt("%.3f..%.3f", c.front(), c.back());
  }
  if (o.ok) o.detail = "concentration " + summary;
  return o;
}

Outcome noise_invariance(const NoiseRuns& runs) {
  Outcome o;
  std::string summary;
  for (std::size_t k = 0; k < runs.sweeps.size(); ++k) {
    const auto& r = runs.sweeps[k];
    const auto at = std::find(r.rates.begin(), r.rates.end(), 0.3) - r.rates.begin();
    const double score = r.invariance_score[static_cast<std::size_t>(at)];
    o.require(score >= 0.90, fmt("seed %.0f: invariance at 0.3 = %.4f", static_cast<double>(k), score));
    summary += (k ? ", " : "") + fmt("%.3f", score);
  }
  if (o.ok) o.detail = "invariance at p=0.3: " + summary;
  return o;
}

Outcome calibration_direction() {
  Outcome o;
  std::vector<double> clean, noisy;
  for (uint64_t seed = 0; seed < 3; ++seed) {
    const Synthetic s = bt_population(300, 2000, 32, 2.0, seed);
    TrainConfig cfg;
    cfg.learning_rate = 1.0;
    cfg.epochs = 500;
    cfg.l2 = 0.0;
    const auto points = calibration_vs_noise(s.train.data, s.eval.data, s.all.embeddings, {0.0, 0.3},
                                             cfg, kDefaultEceBins, seed);
    clean.push_back(points[0].ece);
    noisy.push_back(points[1].ece);
  }
  std::sort(clean.begin(), clean.end());
  std::sort(noisy.begin(), noisy.end());
  o.require(noisy[1] < clean[1], fmt("median ECE %.4f (p=0) vs %.4f (p=0.3)", clean[1], noisy[1]));
  if (o.ok) o.detail = fmt("median ECE %.4f at p=0, %.4f at p=0.3", clean[1], noisy[1]);
  return o;
}

Outcome saturation_machinery() {
  Outcome o;
  // Monotone saturating curve a(f) = 0.5 + 0.4 (1 - exp(-f / 0.12)).
  ScalingCurve c;
  c.fractions = kDefaultFractions;
  for (double f : c.fractions) {
    c.accuracy.push_back(0.5 + 0.4 * (1.0 - std::exp(-f / 0.12)));
    c.sizes.push_back(static_cast<std::size_t>(std::ceil(f * 10000)));
  }
  std::vector<double> perf;
  for (double a : c.accuracy) perf.push_back(a / c.accuracy.back());
  for (double target : {0.90, 0.95}) {
    const SaturationCurve s = saturation(c, target);
    const double expected = testing::first_reaching(c.fractions, perf, target);
    o.require(s.saturation_point && *s.saturation_point == expected,
              fmt("target %.2f: oracle %.5f", target, expected));
    o.require(s.performance_fraction.back() == 1.0, "performance_fraction(1.0) != 1");
  }
  const double p90 = *saturation(c, 0.90).saturation_point;
  const double p95 = *saturation(c, 0.95).saturation_point;
  o.require(p90 <= p95, "saturation point not monotone in target");
  // A measured curve keeps the exact unit endpoint as well.
  const Synthetic s = bt_population(800, 400, 8, 2.0, 9);
  TrainConfig cfg;
  cfg.epochs = 50;
  const ScalingCurve measured =
      scaling_sweep(s.train.data, s.eval.data, s.all.embeddings, kDefaultFractions, cfg, 9);
  o.require(saturation(measured).performance_fraction.back() == 1.0,
            "measured performance_fraction(1.0) != 1");
  if (o.ok) o.detail = fmt("saturation at %.4g (0.90) and %.4g (0.95)", p90, p95);
  return o;
}

Outcome similarity_suite() {
  Outcome o;
  std::mt19937_64 rng(106);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 1 + rng() % 64;
    const auto a = gaussian(rng, dim), b = gaussian(rng, dim);
    auto la = a;
    const double lambda = scale(rng);
    for (auto& x : la) x *= lambda;
    const double s = cosine_similarity(a, b);
    worst = std::max({worst, std::abs(s - cosine_similarity(b, a)), std::abs(s - cosine_similarity(la, b))});
    o.require(std::abs(cosine_similarity(a, a) - 1.0) <= 1e-9, "self-similarity != 1");
  }
  o.require(worst <= 1e-9, fmt("symmetry/scale error %.3g", worst));
  o.require(cosine_similarity(std::vector<double>{1, 0, 0}, std::vector<double>{0, 3, 0}) == 0.0,
            "orthogonal similarity != 0");

  // Four pairs with similarities {0.5, 0.7, 0.9, 0.95}.
  const std::vector<double> sims = {0.5, 0.7, 0.9, 0.95};
  std::vector<PreferenceExample> ex;
  EmbeddingTable table(2);
  for (std::size_t i = 0; i < sims.size(); ++i) {
    const std::string id = "q" + std::to_string(i);
    ex.push_back({id, "p", "c" + id, "r" + id, {}});
    table.insert(embedding_key(id, Role::kChosen), {1.0, 0.0});
    table.insert(embedding_key(id, Role::kRejected), {sims[i], std::sqrt(1.0 - sims[i] * sims[i])});
  }
  FilterLog log;
  log.ingested = ex.size();
  const Dataset d(std::move(ex), {"mem", log});
  const SimilarityReport r = similarity_report(d, table, 0.8, 50);
  o.require(r.high_info_fraction == 0.5, fmt("high_info_fraction %.4f", r.high_info_fraction));
  std::size_t mass = 0;
  for (const auto& b : r.histogram) mass += b.count;
  o.require(mass == 4, "histogram mass != 4");

  const auto big = make_synthetic({.n = 2000, .dim = 12, .seed = 3, .similarity_correlated = true});
  for (std::size_t bins : {1, 10, 50, 97}) {
    std::size_t total = 0;
    for (const auto& b : similarity_report(big.data, big.embeddings, 0.8, bins).histogram) total += b.count;
    o.require(total == 2000, fmt("histogram mass %.0f with %.0f bins", total, bins));
  }
  if (o.ok) o.detail = fmt("identity error %.2g; fixture fraction %.2f", worst, r.high_info_fraction);
  return o;
}

Outcome end_to_end_determinism(double& slowest) {
  Outcome o;
  const fs::path dir = testing::scratch_dir("acceptance_audit");
  const auto s = make_synthetic({.n = 5000, .dim = 16, .seed = 2024});
  write_file(dir / "pairs.jsonl", dump_dataset(s.data));
  std::vector<std::string> reports;
  slowest = 0.0;
  for (const char* run : {"a", "b"}) {
    const fs::path out = dir / run;
    const std::string cmd = std::string(PREFAUDIT_CLI) + " audit --data " + (dir / "pairs.jsonl").string() +
                            " --seed 13 --out-dir " + out.string() + " > " + (dir / "log.txt").string() +
                            " 2>&1";
    const auto t0 = std::chrono::steady_clock::now();
    const int status = std::system(cmd.c_str());
    slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (status != 0) {
      o.require(false, "audit exited with status " + std::to_string(status) + ": " + read_file(dir / "log.txt"));
      return o;
    }
    reports.push_back(read_file(out / "report.json"));
  }
  o.require(reports[0] == reports[1], "report.json differs between runs");
  o.require(slowest < 180.0, fmt("audit took %.1f s", slowest));
  if (o.ok) o.detail = fmt("identical %.0f-byte reports, slowest run %.1f s", static_cast<double>(reports[0].size()), slowest);
  return o;
}

int failures = 0;

void report(const std::string& name, double budget_seconds, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o.ok = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_seconds > 0 && secs >= budget_seconds && o.ok) {
    o.ok = false;
    o.detail = fmt("took %.2f s, budget %.0f s", secs, budget_seconds);
  }
  if (!o.ok) ++failures;
  std::printf("%s %-24s %6.2fs  %s\n", o.ok ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main() {
  report("gradient-oracle", 5.0, gradient_oracle);
  report("bt-exactness", 0.0, bt_exactness);
  report("zero-model-baselines", 0.0, zero_model_baselines);
  report("flip-statistics", 1.0, flip_statistics);
  report("ece-oracle", 5.0, ece_oracle);
  report("z-split-structure", 0.0, z_split_structure);

  NoiseRuns runs;
  double noise_seconds = 0.0;
  {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      runs = noise_runs();
    } catch (const std::exception& e) {
      std::printf("noise sweep failed: %s\n", e.what());
    }
    noise_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  const auto with_sweeps = [&](Outcome (*fn)(const NoiseRuns&)) {
    return [&, fn] {
      Outcome o;
      o.require(runs.sweeps.size() == 3, "noise sweeps did not complete");
      if (!o.ok) return o;
      o = fn(runs);
      o.require(noise_seconds < 60.0, fmt("sweeps took %.1f s", noise_seconds));
      if (o.ok) o.detail += fmt(" (3 sweeps, %.1f s)", noise_seconds);
      return o;
    };
  };
  report("noise-concentration", 0.0, with_sweeps(noise_concentration));
  report("noise-invariance", 0.0, with_sweeps(noise_invariance));
  report("calibration-direction", 30.0, calibration_direction);
  report("saturation-machinery", 0.0, saturation_machinery);
  report("similarity-suite", 0.0, similarity_suite);
  double audit_seconds = 0.0;
  report("end-to-end-determinism", 0.0, [&] { return end_to_end_determinism(audit_seconds); });

  std::printf("%s: %d failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
