#include "prefaudit/audit.hpp"

#include <cstdio>

#include "prefaudit/calibration.hpp"
#include "prefaudit/curves.hpp"
#include "prefaudit/error.hpp"
#include "prefaudit/noise.hpp"
#include "prefaudit/svg.hpp"

namespace prefaudit {

namespace {

std::string rate_label(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "p=%.2f", rate);
  return buf;
}

}  // namespace

AuditInputs load_inputs(const AuditConfig& cfg) {
  if (cfg.data.empty()) throw Error("usage", "no dataset given (--data)");
  AuditInputs in;
  in.data = length_filter(ingest(cfg.data, {cfg.tie_policy}), cfg.max_tokens);
  if (cfg.embeddings) {
    in.embeddings = load_embeddings(*cfg.embeddings, {std::nullopt, cfg.renormalize});
    in.features = describe_features(in.data, in.embeddings, "external", *cfg.embeddings);
    in.featurizer = "external " + *cfg.embeddings + " dim=" +
                    std::to_string(in.embeddings.dim());
    if (!in.features.prompt_conditioned) {
      in.warnings.push_back(
          "embedding table has no prompt_chosen/prompt_rejected keys; reward "
          "features use response embeddings only");
    }
  } else {
    in.embeddings = hash_featurize(in.data, cfg.hash_dim, cfg.seed);
    in.features =
        describe_features(in.data, in.embeddings, "hashed-ngrams", "", cfg.seed);
    in.featurizer = "hashed-ngrams dim=" + std::to_string(cfg.hash_dim);
    in.warnings.push_back("no embeddings given; using built-in hashed n-gram featurizer");
  }
  return in;
}

Json provenance_json(const AuditConfig& cfg, const AuditInputs& inputs) {
  Json j;
  j["dataset"] = cfg.data;
  j["filter_log"] = to_json(inputs.data.provenance().filters);
  j["featurizer"] = inputs.featurizer;
  j["feature_spec"] = to_json(inputs.features);
  j["seeds"] = Json{{"master", cfg.seed}, {"train", cfg.train.seed}};
  j["warnings"] = inputs.warnings;
  j["config"] = to_json(cfg);
  return j;
}

std::string plot_scaling(const ScalingCurve& c) {
  svg::LineChart chart{"Evaluation accuracy vs. training data", "fraction of training data (log2)",
                       "eval accuracy", true, std::nullopt, std::nullopt, {}};
  svg::Series s{"accuracy", {}};
  for (std::size_t i = 0; i < c.fractions.size(); ++i) {
    s.points.emplace_back(c.fractions[i], c.accuracy[i]);
  }
  chart.series.push_back(std::move(s));
  return svg::render(chart);
}

std::string plot_saturation(const SaturationCurve& c) {
  svg::LineChart chart{"Data saturation", "fraction of data used",
                       "fraction of full-data accuracy", false, svg::Range{0.0, 1.0},
                       std::nullopt, {}};
  svg::Series s{"performance", {}};
  for (std::size_t i = 0; i < c.data_fraction.size(); ++i) {
    s.points.emplace_back(c.data_fraction[i], c.performance_fraction[i]);
  }
  chart.series.push_back(std::move(s));
  chart.series.push_back(svg::Series{"target", {{0.0, c.target}, {1.0, c.target}},
                                     false, false, true});
  return svg::render(chart);
}

std::string plot_similarity(const SimilarityReport& r) {
  svg::BarChart chart;
  chart.title = "Cosine similarity of chosen vs. rejected";
  chart.x_label = "cosine similarity";
  chart.y_label = "pairs";
  chart.x_range = svg::Range{-1.0, 1.0};
  std::size_t peak = 1;
  for (const auto& b : r.histogram) {
    chart.bars.push_back({b.lo, b.hi, static_cast<double>(b.count)});
    peak = std::max(peak, b.count);
  }
  chart.y_range = svg::Range{0.0, static_cast<double>(peak) * 1.05};
  chart.overlays.push_back(svg::Series{
      "threshold", {{r.threshold, 0.0}, {r.threshold, static_cast<double>(peak)}},
      false, false, true});
  return svg::render(chart);
}

std::string plot_noise(const NoiseSweepResult& r) {
  svg::LineChart chart{"Label noise sweep", "label flip rate", "value", false,
                       std::nullopt, svg::Range{0.0, 1.05}, {}};
  svg::Series acc{"accuracy", {}}, inv{"invariance", {}}, conc{"mean|P-0.5|", {}};
  for (std::size_t i = 0; i < r.rates.size(); ++i) {
    acc.points.emplace_back(r.rates[i], r.accuracy[i]);
    inv.points.emplace_back(r.rates[i], r.invariance_score[i]);
    conc.points.emplace_back(r.rates[i], r.concentration[i]);
  }
  chart.series = {acc, inv, conc};
  return svg::render(chart);
}

std::string plot_ecdf(const std::vector<double>& rates,
                      const std::vector<std::vector<EcdfPoint>>& curves) {
  svg::LineChart chart{"Empirical CDF of P(chosen > rejected)", "P(chosen > rejected)",
                       "cumulative fraction", false, svg::Range{0.0, 1.0},
                       svg::Range{0.0, 1.0}, {}};
  for (std::size_t i = 0; i < rates.size(); ++i) {
    svg::Series s{rate_label(rates[i]), {}, true, false};
    for (const auto& p : curves[i]) s.points.emplace_back(p.value, p.cumulative_fraction);
    chart.series.push_back(std::move(s));
  }
  return svg::render(chart);
}

std::string plot_reliability(const std::vector<CalibrationPoint>& points) {
  svg::LineChart chart{"Reliability diagram (z-split)", "confidence", "accuracy",
                       false, svg::Range{0.0, 1.0}, svg::Range{0.0, 1.0}, {}};
  for (const auto& p : points) {
    svg::Series s{rate_label(p.rate), {}};
    for (const auto& row : reliability_data(p.report)) s.points.emplace_back(row.conf, row.acc);
    chart.series.push_back(std::move(s));
  }
  chart.series.push_back(svg::Series{"", {{0.0, 0.0}, {1.0, 1.0}}, false, false, true});
  return svg::render(chart);
}

AuditOutput run_audit(const AuditConfig& cfg) {
  cfg.train.validate();
  check_sweep_rates(cfg.noise_rates);
  check_fractions(cfg.fractions);

  const AuditInputs inputs = load_inputs(cfg);
  const TrainEvalSplit parts = split(inputs.data, {cfg.eval_fraction, cfg.seed});
  const EmbeddingTable& e = inputs.embeddings;

  AuditOutput out;
  Json& report = out.report;
  report["schema_version"] = kSchemaVersion;
  report["tool_version"] = PREFAUDIT_VERSION;
  report["provenance"] = nullptr;  // filled last; keeps its position

  Json prov = provenance_json(cfg, inputs);
  prov["split"] = Json{{"train", parts.train.size()}, {"eval", parts.eval.size()}};

  // Information content.
  const SimilarityReport sim = similarity_report(inputs.data, e, cfg.threshold, cfg.bins);
  report["similarity"] = to_json(sim);

  // Scale.
  const ScalingCurve curve = scaling_sweep(parts.train, parts.eval, e, cfg.fractions,
                                           cfg.train, cfg.seed, inputs.features,
                                           cfg.threads);
  const SaturationCurve sat = saturation(curve, cfg.saturation_target);
  Json scaling;
  scaling["curve"] = to_json(curve);
  scaling["saturation"] = to_json(sat);
  try {
    scaling["doubling_gain"] = doubling_gain(curve);
  } catch (const Error& err) {
    scaling["doubling_gain"] = nullptr;
    prov["warnings"].push_back(std::string("doubling_gain skipped: ") + err.what());
  }
  report["scaling"] = std::move(scaling);

  // Noise and calibration share one set of trained models.
  const std::vector<NoisePoint> points =
      run_noise_points(parts.train, parts.eval, e, cfg.noise_rates, cfg.train, cfg.seed,
                       inputs.features, cfg.threads);
  const NoiseSweepResult sweep = summarize_noise(points);
  std::vector<std::vector<EcdfPoint>> ecdfs;
  std::vector<CalibrationPoint> calibration;
  Json ecdf_json = Json::array();
  Json calib_json = Json::array();
  for (const auto& p : points) {
    ecdfs.push_back(probability_ecdf(p.eval.predictions, cfg.ecdf_grid));
    ecdf_json.push_back(Json{{"rate", p.rate}, {"points", to_json(ecdfs.back())}});
    calibration.push_back(calibrate_point(p, cfg.ece_bins));
    Json row = to_json(calibration.back().report);
    row["rate"] = p.rate;
    calib_json.push_back(std::move(row));
  }
  Json noise = to_json(sweep);
  noise["ecdf"] = std::move(ecdf_json);
  report["noise"] = std::move(noise);
  report["calibration"] = Json{{"m_bins", cfg.ece_bins}, {"per_rate", std::move(calib_json)}};
  report["provenance"] = std::move(prov);

  out.files["report.json"] = report.dump(2) + "\n";
  out.files["curves/scaling.csv"] = scaling_csv(curve);
  out.files["curves/saturation.csv"] = saturation_csv(sat);
  out.files["curves/noise.csv"] = noise_csv(sweep);
  out.files["curves/calibration.csv"] = calibration_csv(calibration);
  out.files["curves/similarity.csv"] = similarity_csv(sim);
  out.files["curves/ecdf.csv"] = ecdf_csv(sweep.rates, ecdfs);
  out.files["plots/scaling.svg"] = plot_scaling(curve);
  out.files["plots/saturation.svg"] = plot_saturation(sat);
  out.files["plots/similarity.svg"] = plot_similarity(sim);
  out.files["plots/noise.svg"] = plot_noise(sweep);
  out.files["plots/ecdf.svg"] = plot_ecdf(sweep.rates, ecdfs);
  out.files["plots/reliability.svg"] = plot_reliability(calibration);
  return out;
}

void write_artifacts(const Artifacts& files, const std::filesystem::path& out_dir) {
  for (const auto& [rel, contents] : files) write_file(out_dir / rel, contents);
}

}  // namespace prefaudit
