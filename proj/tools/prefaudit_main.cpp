// prefaudit: audits pairwise preference datasets along scale, label noise
// and response-pair information content.
//
//   prefaudit audit --data prefs.jsonl --out-dir out/
//   prefaudit noise --data prefs.jsonl --noise-rates 0,0.1,0.2,0.3,0.4
//
// Exit codes: 0 ok, 1 runtime error (structured JSON on stderr), 2 usage.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prefaudit/audit.hpp"
#include "prefaudit/bt_reward.hpp"
#include "prefaudit/calibration.hpp"
#include "prefaudit/config.hpp"
#include "prefaudit/curves.hpp"
#include "prefaudit/error.hpp"
#include "prefaudit/features.hpp"
#include "prefaudit/noise.hpp"
#include "prefaudit/serialize.hpp"

namespace pa = prefaudit;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Raw flag values; only flags the user actually passed override the config.
struct Flags {
  std::string data, embeddings, config, out_dir, model, tie_policy, noise_rates,
      fractions, seeds, split = "eval";
  uint64_t seed = 0, train_seed = 0;
  double eval_fraction = 0, threshold = 0, target = 0, lr = 0, l2 = 0;
  std::size_t max_tokens = 0, bins = 0, ece_bins = 0, hash_dim = 0, epochs = 0,
              batch_size = 0, patience = 0, size = 0, threads = 0, ecdf_grid = 0;
  bool renormalize = false, per_example = false;

  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App* cmd, Flags& f) {
  f.opts["data"] = cmd->add_option("--data", f.data, "Canonical preference JSONL");
  f.opts["embeddings"] =
      cmd->add_option("--embeddings", f.embeddings, "Embedding JSONL (<id>:<role> keys)");
  f.opts["renormalize"] =
      cmd->add_flag("--renormalize", f.renormalize, "Rescale loaded embeddings to unit norm");
  f.opts["config"] = cmd->add_option("--config", f.config, "TOML config file");
  f.opts["seed"] = cmd->add_option("--seed", f.seed, "Seed for split, subsamples and flips");
  f.opts["eval-fraction"] =
      cmd->add_option("--eval-fraction", f.eval_fraction, "Held-out fraction (0,1)");
  f.opts["max-tokens"] = cmd->add_option(
      "--max-tokens", f.max_tokens, "Drop examples whose prompt+response exceeds this (default 512)");
  f.opts["tie-policy"] = cmd->add_option("--tie-policy", f.tie_policy, "drop | error")
                             ->check(CLI::IsMember({"drop", "error"}));
  f.opts["out-dir"] = cmd->add_option("--out-dir", f.out_dir, "Output directory");
  f.opts["hash-dim"] =
      cmd->add_option("--hash-dim", f.hash_dim, "Hashed featurizer dimension (default 512)");
  f.opts["threads"] = cmd->add_option("--threads", f.threads, "Workers for independent sweep points");
}

void add_training(CLI::App* cmd, Flags& f) {
  f.opts["lr"] = cmd->add_option("--lr", f.lr, "Learning rate");
  f.opts["epochs"] = cmd->add_option("--epochs", f.epochs, "Training epochs");
  f.opts["l2"] = cmd->add_option("--l2", f.l2, "L2 penalty");
  f.opts["batch-size"] = cmd->add_option("--batch-size", f.batch_size, "Minibatch size (default full)");
  f.opts["patience"] = cmd->add_option("--patience", f.patience, "Early-stopping patience (epochs)");
  f.opts["train-seed"] = cmd->add_option("--train-seed", f.train_seed, "Minibatch shuffle seed");
}

pa::AuditConfig resolve(const Flags& f) {
  pa::AuditConfig cfg;
  if (f.given("config")) cfg = pa::load_config(f.config, cfg);
  if (f.given("data")) cfg.data = f.data;
  if (f.given("embeddings")) cfg.embeddings = f.embeddings;
  if (f.given("renormalize")) cfg.renormalize = f.renormalize;
  if (f.given("seed")) cfg.seed = f.seed;
  if (f.given("eval-fraction")) cfg.eval_fraction = f.eval_fraction;
  if (f.given("max-tokens")) cfg.max_tokens = f.max_tokens;
  if (f.given("tie-policy")) {
    cfg.tie_policy = f.tie_policy == "error" ? pa::TiePolicy::kError : pa::TiePolicy::kDrop;
  }
  if (f.given("out-dir")) cfg.out_dir = f.out_dir;
  if (f.given("hash-dim")) cfg.hash_dim = f.hash_dim;
  if (f.given("threads")) cfg.threads = f.threads;
  if (f.given("noise-rates")) cfg.noise_rates = pa::parse_number_list(f.noise_rates);
  if (f.given("fractions")) cfg.fractions = pa::parse_number_list(f.fractions);
  if (f.given("bins")) cfg.bins = f.bins;
  if (f.given("ece-bins")) cfg.ece_bins = f.ece_bins;
  if (f.given("threshold")) cfg.threshold = f.threshold;
  if (f.given("target")) cfg.saturation_target = f.target;
  if (f.given("ecdf-grid")) cfg.ecdf_grid = f.ecdf_grid;
  if (f.given("model")) cfg.model = f.model;
  if (f.given("lr")) cfg.train.learning_rate = f.lr;
  if (f.given("epochs")) cfg.train.epochs = f.epochs;
  if (f.given("l2")) cfg.train.l2 = f.l2;
  if (f.given("batch-size")) cfg.train.batch_size = f.batch_size;
  if (f.given("patience")) cfg.train.early_stop_patience = f.patience;
  if (f.given("train-seed")) cfg.train.seed = f.train_seed;
  if (f.given("size")) cfg.info_size = f.size;
  if (f.given("seeds")) {
    cfg.info_seeds.clear();
    for (double s : pa::parse_number_list(f.seeds)) {
      if (s < 0 || s != std::floor(s)) throw pa::Error("usage", "--seeds takes nonnegative integers");
      cfg.info_seeds.push_back(static_cast<uint64_t>(s));
    }
  }
  if (!f.given("model") && cfg.model == "model.json") {
    cfg.model = (std::filesystem::path(cfg.out_dir) / "model.json").string();
  }
  cfg.train.validate();
  return cfg;
}

std::filesystem::path out_path(const pa::AuditConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.out_dir) / name;
}

pa::Json base_json(const pa::AuditConfig& cfg, const pa::AuditInputs& in) {
  pa::Json j;
  j["schema_version"] = pa::kSchemaVersion;
  j["tool_version"] = PREFAUDIT_VERSION;
  j["provenance"] = pa::provenance_json(cfg, in);
  return j;
}

void emit(const pa::AuditConfig& cfg, const std::string& name, const pa::Json& j) {
  const std::string text = j.dump(2) + "\n";
  pa::write_file(out_path(cfg, name), text);
  std::cout << text;
}

double quantile(std::vector<std::size_t> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto idx = static_cast<std::size_t>(
      std::min<double>(sorted.size() - 1, std::floor(q * static_cast<double>(sorted.size() - 1) + 0.5)));
  return static_cast<double>(sorted[idx]);
}

int cmd_stats(const pa::AuditConfig& cfg) {
  if (cfg.data.empty()) throw pa::Error("usage", "stats needs --data");
  const pa::Dataset raw = pa::ingest(cfg.data, {cfg.tie_policy});
  const pa::Dataset kept = pa::length_filter(raw, cfg.max_tokens);

  std::vector<std::size_t> lengths;
  for (const auto& ex : raw.examples()) {
    lengths.push_back(pa::token_count(ex.prompt) +
                      std::max(pa::token_count(ex.chosen), pa::token_count(ex.rejected)));
  }
  std::sort(lengths.begin(), lengths.end());
  double mean = 0.0;
  for (auto l : lengths) mean += static_cast<double>(l);
  if (!lengths.empty()) mean /= static_cast<double>(lengths.size());

  pa::Json j;
  j["schema_version"] = pa::kSchemaVersion;
  j["dataset"] = cfg.data;
  j["count"] = kept.size();
  j["filter_log"] = pa::to_json(kept.provenance().filters);
  j["max_tokens"] = cfg.max_tokens;
  pa::Json dist;
  dist["min"] = lengths.empty() ? 0 : lengths.front();
  dist["p50"] = quantile(lengths, 0.5);
  dist["p90"] = quantile(lengths, 0.9);
  dist["p99"] = quantile(lengths, 0.99);
  dist["max"] = lengths.empty() ? 0 : lengths.back();
  dist["mean"] = mean;
  j["token_length"] = std::move(dist);
  emit(cfg, "stats.json", j);
  return 0;
}

int cmd_train(const pa::AuditConfig& cfg) {
  const pa::AuditInputs in = pa::load_inputs(cfg);
  const auto parts = pa::split(in.data, {cfg.eval_fraction, cfg.seed});
  const pa::TrainResult result =
      pa::train(parts.train, in.embeddings, cfg.train, &parts.eval, in.features);
  const std::filesystem::path model_path = cfg.model;
  pa::save_model(result.model, model_path);

  pa::Json j = base_json(cfg, in);
  j["model"] = model_path.string();
  pa::Json history = pa::Json::array();
  for (const auto& s : result.history) history.push_back(pa::to_json(s));
  j["history"] = std::move(history);
  j["best_epoch"] = result.best_epoch ? pa::Json(*result.best_epoch) : pa::Json(nullptr);
  j["eval_accuracy"] = pa::evaluate(result.model, parts.eval, in.embeddings).accuracy;
  emit(cfg, "train.json", j);
  return 0;
}

int cmd_eval(const pa::AuditConfig& cfg, const std::string& which) {
  const pa::RewardModel model = pa::load_model(cfg.model);
  pa::AuditConfig feature_cfg = cfg;
  if (model.feature_spec.featurizer == "hashed-ngrams" && !cfg.embeddings) {
    // Rebuild exactly the features the model was trained on.
    feature_cfg.hash_dim = model.feature_spec.dim;
    feature_cfg.seed = model.feature_spec.hash_seed;
  }
  pa::AuditInputs in = pa::load_inputs(feature_cfg);
  const pa::Dataset target =
      which == "all" ? in.data : pa::split(in.data, {cfg.eval_fraction, cfg.seed}).eval;
  const pa::EvalResult result = pa::evaluate(model, target, in.embeddings);

  pa::Json j = base_json(cfg, in);
  j["model"] = cfg.model;
  j["split"] = which;
  j["n"] = target.size();
  j["accuracy"] = result.accuracy;
  j["concentration"] = pa::concentration(result.predictions);
  j["ecdf"] = pa::to_json(pa::probability_ecdf(result.predictions, cfg.ecdf_grid));
  std::string csv = "id,p_win,correct\n";
  for (const auto& p : result.predictions) {
    csv += p.id + "," + pa::format_double(p.p_win) + "," + (p.correct ? "1" : "0") + "\n";
  }
  pa::write_file(out_path(cfg, "predictions.csv"), csv);
  emit(cfg, "eval.json", j);
  return 0;
}

int cmd_noise(const pa::AuditConfig& cfg) {
  const pa::AuditInputs in = pa::load_inputs(cfg);
  const auto parts = pa::split(in.data, {cfg.eval_fraction, cfg.seed});
  const auto points = pa::run_noise_points(parts.train, parts.eval, in.embeddings,
                                           cfg.noise_rates, cfg.train, cfg.seed,
                                           in.features, cfg.threads);
  const pa::NoiseSweepResult sweep = pa::summarize_noise(points);
  std::vector<std::vector<pa::EcdfPoint>> ecdfs;
  for (const auto& p : points) ecdfs.push_back(pa::probability_ecdf(p.eval.predictions, cfg.ecdf_grid));

  pa::write_file(out_path(cfg, "noise.csv"), pa::noise_csv(sweep));
  pa::write_file(out_path(cfg, "ecdf.csv"), pa::ecdf_csv(sweep.rates, ecdfs));
  pa::write_file(out_path(cfg, "noise.svg"), pa::plot_noise(sweep));
  pa::write_file(out_path(cfg, "ecdf.svg"), pa::plot_ecdf(sweep.rates, ecdfs));
  pa::Json j = base_json(cfg, in);
  j["noise"] = pa::to_json(sweep);
  emit(cfg, "noise.json", j);
  return 0;
}

int cmd_scale(const pa::AuditConfig& cfg) {
  const pa::AuditInputs in = pa::load_inputs(cfg);
  const auto parts = pa::split(in.data, {cfg.eval_fraction, cfg.seed});
  const pa::ScalingCurve curve =
      pa::scaling_sweep(parts.train, parts.eval, in.embeddings, cfg.fractions, cfg.train,
                        cfg.seed, in.features, cfg.threads);
  pa::Json j = base_json(cfg, in);
  j["curve"] = pa::to_json(curve);
  pa::write_file(out_path(cfg, "scaling.csv"), pa::scaling_csv(curve));
  pa::write_file(out_path(cfg, "scaling.svg"), pa::plot_scaling(curve));
  if (std::find(curve.fractions.begin(), curve.fractions.end(), 1.0) != curve.fractions.end()) {
    const pa::SaturationCurve sat = pa::saturation(curve, cfg.saturation_target);
    j["saturation"] = pa::to_json(sat);
    pa::write_file(out_path(cfg, "saturation.csv"), pa::saturation_csv(sat));
    pa::write_file(out_path(cfg, "saturation.svg"), pa::plot_saturation(sat));
  }
  try {
    j["doubling_gain"] = pa::doubling_gain(curve);
  } catch (const pa::Error&) {
    j["doubling_gain"] = nullptr;
  }
  emit(cfg, "scale.json", j);
  return 0;
}

int cmd_calibration(const pa::AuditConfig& cfg) {
  const pa::AuditInputs in = pa::load_inputs(cfg);
  const auto parts = pa::split(in.data, {cfg.eval_fraction, cfg.seed});
  std::vector<pa::CalibrationPoint> points;
  for (const auto& p : pa::run_noise_points(parts.train, parts.eval, in.embeddings,
                                            cfg.noise_rates, cfg.train, cfg.seed,
                                            in.features, cfg.threads)) {
    points.push_back(pa::calibrate_point(p, cfg.ece_bins));
  }
  pa::Json j = base_json(cfg, in);
  pa::Json rows = pa::Json::array();
  for (const auto& p : points) rows.push_back(pa::Json{{"rate", p.rate}, {"ece", p.ece}});
  j["m_bins"] = cfg.ece_bins;
  j["ece"] = std::move(rows);
  pa::write_file(out_path(cfg, "calibration.csv"), pa::calibration_csv(points));
  pa::write_file(out_path(cfg, "reliability.svg"), pa::plot_reliability(points));
  emit(cfg, "calibration.json", j);
  return 0;
}

int cmd_similarity(const pa::AuditConfig& cfg, bool per_example) {
  const pa::AuditInputs in = pa::load_inputs(cfg);
  const pa::SimilarityReport r =
      pa::similarity_report(in.data, in.embeddings, cfg.threshold, cfg.bins, per_example);
  pa::Json j = base_json(cfg, in);
  j["similarity"] = pa::to_json(r);
  pa::write_file(out_path(cfg, "similarity.csv"), pa::similarity_csv(r));
  pa::write_file(out_path(cfg, "similarity.svg"), pa::plot_similarity(r));
  emit(cfg, "similarity.json", j);
  return 0;
}

int cmd_info_compare(const pa::AuditConfig& cfg) {
  const pa::AuditInputs in = pa::load_inputs(cfg);
  const auto parts = pa::split(in.data, {cfg.eval_fraction, cfg.seed});
  std::size_t size = 0;
  if (cfg.info_size) {
    size = *cfg.info_size;
  } else {
    for (double s : pa::pair_similarities(parts.train, in.embeddings)) size += s < cfg.threshold;
    if (size == 0) {
      throw pa::Error("high_info", "no training pairs have similarity below " +
                                       pa::format_double(cfg.threshold));
    }
  }
  const pa::InfoCompareResult r =
      pa::info_compare(parts.train, parts.eval, in.embeddings, cfg.threshold, size,
                       cfg.train, cfg.info_seeds, cfg.threads);
  pa::Json j = base_json(cfg, in);
  j["threshold"] = cfg.threshold;
  j["info_compare"] = pa::to_json(r);
  pa::write_file(out_path(cfg, "info_compare.csv"), pa::info_compare_csv(r));
  emit(cfg, "info_compare.json", j);
  return 0;
}

int cmd_audit(const pa::AuditConfig& cfg) {
  const pa::AuditOutput out = pa::run_audit(cfg);
  pa::write_artifacts(out.files, cfg.out_dir);
  std::cout << "wrote " << out.files.size() << " files to " << cfg.out_dir << "\n";
  return 0;
}

void print_error(const std::string& kind, const std::string& message) {
  pa::Json j;
  j["error"] = pa::Json{{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prefaudit: audit pairwise preference datasets for reward modeling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PREFAUDIT_VERSION);

  Flags f;
  auto* stats = app.add_subcommand("stats", "Counts, token lengths and filter log");
  auto* train = app.add_subcommand("train", "Train a Bradley-Terry reward model");
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model");
  auto* noise = app.add_subcommand("noise", "Label-flip noise sweep");
  auto* scale = app.add_subcommand("scale", "Scaling and saturation curves");
  auto* calibration = app.add_subcommand("calibration", "ECE under label noise");
  auto* similarity = app.add_subcommand("similarity", "Response-pair cosine similarity");
  auto* info = app.add_subcommand("info-compare", "High-information vs. random subsets");
  auto* audit = app.add_subcommand("audit", "Full audit: report.json, CSVs and SVG plots");

  for (auto* cmd : {stats, train, eval, noise, scale, calibration, similarity, info, audit}) {
    add_common(cmd, f);
  }
  for (auto* cmd : {train, noise, scale, calibration, info, audit}) add_training(cmd, f);
  for (auto* cmd : {noise, calibration, audit}) {
    f.opts["noise-rates"] = cmd->add_option("--noise-rates", f.noise_rates,
                                            "Comma-separated flip rates, ascending in [0, 0.5]");
  }
  for (auto* cmd : {noise, eval, audit}) {
    f.opts["ecdf-grid"] = cmd->add_option("--ecdf-grid", f.ecdf_grid, "ECDF sample points");
  }
  for (auto* cmd : {scale, audit}) {
    f.opts["fractions"] = cmd->add_option("--fractions", f.fractions,
                                          "Comma-separated data fractions, ascending in (0, 1]");
    f.opts["target"] = cmd->add_option("--target", f.target, "Saturation target (default 0.95)");
  }
  for (auto* cmd : {similarity, audit}) {
    f.opts["bins"] = cmd->add_option("--bins", f.bins, "Similarity histogram bins (default 50)");
  }
  for (auto* cmd : {similarity, info, audit}) {
    f.opts["threshold"] = cmd->add_option("--threshold", f.threshold,
                                          "High-information similarity threshold (default 0.8)");
  }
  for (auto* cmd : {calibration, audit}) {
    f.opts["ece-bins"] = cmd->add_option("--ece-bins", f.ece_bins, "ECE bins (default 10)");
  }
  for (auto* cmd : {train, eval}) {
    f.opts["model"] = cmd->add_option("--model", f.model, "Model file");
  }
  eval->add_option("--split", f.split, "Evaluate the held-out split or all examples")
      ->check(CLI::IsMember({"eval", "all"}));
  similarity->add_flag("--per-example", f.per_example, "Include per-pair similarities");
  f.opts["size"] = info->add_option("--size", f.size, "Subset size (default: all qualifying pairs)");
  f.opts["seeds"] = info->add_option("--seeds", f.seeds, "Comma-separated seeds (default 0,1,2,3,4)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  // Each flag is registered on several subcommands; keep the pointer from
  // the subcommand that actually ran.
  CLI::App* active = app.get_subcommands().front();
  for (auto& [name, opt] : f.opts) {
    if (auto* local = active->get_option_no_throw("--" + name)) opt = local;
  }

  try {
    const pa::AuditConfig cfg = resolve(f);
    const std::string name = active->get_name();
    if (name == "stats") return cmd_stats(cfg);
    if (name == "train") return cmd_train(cfg);
    if (name == "eval") return cmd_eval(cfg, f.split);
    if (name == "noise") return cmd_noise(cfg);
    if (name == "scale") return cmd_scale(cfg);
    if (name == "calibration") return cmd_calibration(cfg);
    if (name == "similarity") return cmd_similarity(cfg, f.per_example);
    if (name == "info-compare") return cmd_info_compare(cfg);
    if (name == "audit") return cmd_audit(cfg);
  } catch (const pa::Error& e) {
    print_error(e.kind(), e.what());
    return e.kind() == "usage" ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
