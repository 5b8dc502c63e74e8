#include "prefaudit/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "prefaudit/error.hpp"

namespace prefaudit {

namespace {

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::optional<double> read_optional(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error("schema", std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema", std::string("field \"") + key + "\": " + e.what());
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw Error("format", "cannot format number");
  return std::string(buf, end);
}

Json to_json(const FilterLog& log) {
  Json j;
  j["ingested"] = log.ingested;
  j["kept"] = log.ingested - log.total_dropped();
  Json dropped = Json::object();
  for (const auto& [rule, count] : log.dropped) dropped[rule] = count;
  j["dropped"] = std::move(dropped);
  return j;
}

Json to_json(const Provenance& p) {
  return Json{{"source", p.source}, {"filter_log", to_json(p.filters)}};
}

Json to_json(const TrainConfig& cfg) {
  Json j;
  j["learning_rate"] = cfg.learning_rate;
  j["epochs"] = cfg.epochs;
  j["l2"] = cfg.l2;
  j["batch_size"] = cfg.batch_size ? Json(*cfg.batch_size) : Json("full");
  j["seed"] = cfg.seed;
  j["early_stop_patience"] =
      cfg.early_stop_patience ? Json(*cfg.early_stop_patience) : Json(nullptr);
  return j;
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig cfg;
  cfg.learning_rate = field<double>(j, "learning_rate");
  cfg.epochs = field<std::size_t>(j, "epochs");
  cfg.l2 = field<double>(j, "l2");
  if (j.contains("batch_size") && j["batch_size"].is_number_unsigned()) {
    cfg.batch_size = j["batch_size"].get<std::size_t>();
  }
  cfg.seed = field<uint64_t>(j, "seed");
  if (j.contains("early_stop_patience") && !j["early_stop_patience"].is_null()) {
    cfg.early_stop_patience = j["early_stop_patience"].get<std::size_t>();
  }
  return cfg;
}

Json to_json(const FeatureSpec& spec) {
  Json j;
  j["featurizer"] = spec.featurizer;
  j["dim"] = spec.dim;
  j["hash_seed"] = spec.hash_seed;
  j["source"] = spec.source;
  j["prompt_conditioned"] = spec.prompt_conditioned;
  return j;
}

FeatureSpec feature_spec_from_json(const Json& j) {
  FeatureSpec spec;
  spec.featurizer = field<std::string>(j, "featurizer");
  spec.dim = field<std::size_t>(j, "dim");
  spec.hash_seed = j.value("hash_seed", uint64_t{0});
  spec.source = j.value("source", std::string());
  spec.prompt_conditioned = field<bool>(j, "prompt_conditioned");
  return spec;
}

Json to_json(const RewardModel& m) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["dim"] = m.dim;
  j["weights"] = m.weights;
  j["bias"] = m.bias;
  j["feature_spec"] = to_json(m.feature_spec);
  if (m.train_meta) {
    j["train_meta"] = Json{{"cfg", to_json(m.train_meta->config)},
                           {"final_loss", m.train_meta->final_loss},
                           {"epochs_run", m.train_meta->epochs_run},
                           {"seed", m.train_meta->config.seed}};
  } else {
    j["train_meta"] = nullptr;
  }
  return j;
}

RewardModel model_from_json(const Json& j) {
  if (j.contains("schema_version")) check_schema_version(j);
  RewardModel m;
  m.dim = field<std::size_t>(j, "dim");
  m.weights = field<std::vector<double>>(j, "weights");
  m.bias = field<double>(j, "bias");
  if (m.weights.size() != m.dim) {
    throw Error("schema", "model has " + std::to_string(m.weights.size()) +
                              " weights for dim " + std::to_string(m.dim));
  }
  m.feature_spec = feature_spec_from_json(field<Json>(j, "feature_spec"));
  if (j.contains("train_meta") && !j["train_meta"].is_null()) {
    const Json& meta = j["train_meta"];
    m.train_meta = TrainMeta{train_config_from_json(field<Json>(meta, "cfg")),
                             field<double>(meta, "final_loss"),
                             meta.value("epochs_run", std::size_t{0})};
  }
  return m;
}

Json to_json(const EpochStats& s) {
  Json j;
  j["epoch"] = s.epoch;
  j["loss"] = s.loss;
  j["train_accuracy"] = s.train_accuracy;
  j["eval_accuracy"] = optional_number(s.eval_accuracy);
  return j;
}

Json to_json(const ScalingCurve& c) {
  Json j;
  j["fractions"] = c.fractions;
  j["sizes"] = c.sizes;
  j["accuracy"] = c.accuracy;
  j["seed"] = c.seed;
  return j;
}

ScalingCurve scaling_curve_from_json(const Json& j) {
  ScalingCurve c;
  c.fractions = field<std::vector<double>>(j, "fractions");
  c.sizes = field<std::vector<std::size_t>>(j, "sizes");
  c.accuracy = field<std::vector<double>>(j, "accuracy");
  c.seed = field<uint64_t>(j, "seed");
  return c;
}

Json to_json(const SaturationCurve& c) {
  Json j;
  j["data_fraction"] = c.data_fraction;
  j["performance_fraction"] = c.performance_fraction;
  j["saturation_point"] = optional_number(c.saturation_point);
  j["target"] = c.target;
  return j;
}

SaturationCurve saturation_curve_from_json(const Json& j) {
  SaturationCurve c;
  c.data_fraction = field<std::vector<double>>(j, "data_fraction");
  c.performance_fraction = field<std::vector<double>>(j, "performance_fraction");
  c.saturation_point = read_optional(field<Json>(j, "saturation_point"));
  c.target = field<double>(j, "target");
  return c;
}

Json to_json(const NoiseSweepResult& r) {
  Json j;
  j["rates"] = r.rates;
  j["accuracy"] = r.accuracy;
  j["invariance_score"] = r.invariance_score;
  j["concentration"] = r.concentration;
  j["flip_counts"] = r.flip_counts;
  return j;
}

NoiseSweepResult noise_sweep_from_json(const Json& j) {
  NoiseSweepResult r;
  r.rates = field<std::vector<double>>(j, "rates");
  r.accuracy = field<std::vector<double>>(j, "accuracy");
  r.invariance_score = field<std::vector<double>>(j, "invariance_score");
  r.concentration = field<std::vector<double>>(j, "concentration");
  r.flip_counts = field<std::vector<std::size_t>>(j, "flip_counts");
  return r;
}

Json to_json(const SimilarityReport& r) {
  Json j;
  j["threshold"] = r.threshold;
  j["high_info_fraction"] = r.high_info_fraction;
  Json hist = Json::array();
  for (const auto& b : r.histogram) {
    hist.push_back(Json{{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
  }
  j["histogram"] = std::move(hist);
  if (!r.per_example.empty()) {
    Json rows = Json::array();
    for (const auto& [id, s] : r.per_example) rows.push_back(Json{{"id", id}, {"similarity", s}});
    j["per_example"] = std::move(rows);
  }
  return j;
}

SimilarityReport similarity_report_from_json(const Json& j) {
  SimilarityReport r;
  r.threshold = field<double>(j, "threshold");
  r.high_info_fraction = field<double>(j, "high_info_fraction");
  for (const auto& b : field<Json>(j, "histogram")) {
    r.histogram.push_back({field<double>(b, "lo"), field<double>(b, "hi"),
                           field<std::size_t>(b, "count")});
  }
  if (j.contains("per_example")) {
    for (const auto& row : j["per_example"]) {
      r.per_example.emplace_back(field<std::string>(row, "id"),
                                 field<double>(row, "similarity"));
    }
  }
  return r;
}

Json to_json(const CalibrationReport& r) {
  Json j;
  j["ece"] = r.ece;
  j["n_records"] = r.n_records;
  Json bins = Json::array();
  for (const auto& b : r.bins) {
    bins.push_back(Json{{"lo", b.lo},
                        {"hi", b.hi},
                        {"count", b.count},
                        {"conf", optional_number(b.conf)},
                        {"acc", optional_number(b.acc)}});
  }
  j["bins"] = std::move(bins);
  return j;
}

CalibrationReport calibration_report_from_json(const Json& j) {
  CalibrationReport r;
  r.ece = field<double>(j, "ece");
  r.n_records = field<std::size_t>(j, "n_records");
  for (const auto& b : field<Json>(j, "bins")) {
    r.bins.push_back({field<double>(b, "lo"), field<double>(b, "hi"),
                      field<std::size_t>(b, "count"), read_optional(b.at("conf")),
                      read_optional(b.at("acc"))});
  }
  return r;
}

Json to_json(const InfoCompareResult& r) {
  Json j;
  j["subset_size"] = r.subset_size;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back(Json{{"kind", row.kind}, {"seed", row.seed}, {"accuracy", row.accuracy}});
  }
  j["rows"] = std::move(rows);
  j["mean_difference"] = r.mean_difference;
  return j;
}

Json to_json(const std::vector<EcdfPoint>& ecdf) {
  Json j = Json::array();
  for (const auto& p : ecdf) j.push_back(Json::array({p.value, p.cumulative_fraction}));
  return j;
}

void check_schema_version(const Json& j) {
  if (!j.contains("schema_version") || !j["schema_version"].is_string()) {
    throw Error("schema", "missing schema_version");
  }
  const std::string version = j["schema_version"].get<std::string>();
  int major = -1;
  const auto dot = version.find('.');
  const std::string head = version.substr(0, dot);
  auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), major);
  if (ec != std::errc() || ptr != head.data() + head.size() || major != kSchemaMajor) {
    throw Error("schema", "unsupported schema_version \"" + version + "\" (expected " +
                              std::to_string(kSchemaMajor) + ".x)");
  }
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << contents;
  if (!out) throw Error("io", "failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void save_model(const RewardModel& m, const std::filesystem::path& path) {
  write_file(path, to_json(m).dump(2) + "\n");
}

RewardModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(Json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema", path.string() + ": " + e.what());
  }
}

Json load_report(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("schema", path.string() + ": " + e.what());
  }
  check_schema_version(j);
  return j;
}

std::string dump_dataset(const Dataset& d) {
  std::string out;
  for (const auto& ex : d.examples()) {
    Json j;
    j["id"] = ex.id;
    j["prompt"] = ex.prompt;
    j["chosen"] = ex.chosen;
    j["rejected"] = ex.rejected;
    if (!ex.meta.empty()) {
      Json meta = Json::object();
      for (const auto& [k, v] : ex.meta) meta[k] = v;
      j["meta"] = std::move(meta);
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string scaling_csv(const ScalingCurve& c) {
  std::string out = "fraction,size,accuracy\n";
  for (std::size_t i = 0; i < c.fractions.size(); ++i) {
    out += format_double(c.fractions[i]) + "," + std::to_string(c.sizes[i]) + "," +
           format_double(c.accuracy[i]) + "\n";
  }
  return out;
}

std::string saturation_csv(const SaturationCurve& c) {
  std::string out = "fraction,performance_fraction\n";
  for (std::size_t i = 0; i < c.data_fraction.size(); ++i) {
    out += format_double(c.data_fraction[i]) + "," +
           format_double(c.performance_fraction[i]) + "\n";
  }
  return out;
}

std::string noise_csv(const NoiseSweepResult& r) {
  std::string out = "rate,accuracy,invariance_score,concentration,flips\n";
  for (std::size_t i = 0; i < r.rates.size(); ++i) {
    out += format_double(r.rates[i]) + "," + format_double(r.accuracy[i]) + "," +
           format_double(r.invariance_score[i]) + "," +
           format_double(r.concentration[i]) + "," + std::to_string(r.flip_counts[i]) +
           "\n";
  }
  return out;
}

std::string calibration_csv(const std::vector<CalibrationPoint>& points) {
  std::string out = "rate,bin_lo,bin_hi,count,conf,acc\n";
  for (const auto& p : points) {
    for (const auto& b : p.report.bins) {
      out += format_double(p.rate) + "," + format_double(b.lo) + "," +
             format_double(b.hi) + "," + std::to_string(b.count) + "," +
             (b.conf ? format_double(*b.conf) : "") + "," +
             (b.acc ? format_double(*b.acc) : "") + "\n";
    }
  }
  return out;
}

std::string info_compare_csv(const InfoCompareResult& r) {
  std::string out = "kind,seed,accuracy\n";
  for (const auto& row : r.rows) {
    out += row.kind + "," + std::to_string(row.seed) + "," + format_double(row.accuracy) +
           "\n";
  }
  return out;
}

std::string similarity_csv(const SimilarityReport& r) {
  std::string out = "bin_lo,bin_hi,count\n";
  for (const auto& b : r.histogram) {
    out += format_double(b.lo) + "," + format_double(b.hi) + "," +
           std::to_string(b.count) + "\n";
  }
  return out;
}

std::string ecdf_csv(const std::vector<double>& rates,
                     const std::vector<std::vector<EcdfPoint>>& curves) {
  std::string out = "rate,value,cumulative_fraction\n";
  for (std::size_t i = 0; i < rates.size(); ++i) {
    for (const auto& p : curves[i]) {
      out += format_double(rates[i]) + "," + format_double(p.value) + "," +
             format_double(p.cumulative_fraction) + "\n";
    }
  }
  return out;
}

}  // namespace prefaudit
