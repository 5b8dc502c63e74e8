#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "prefaudit/audit.hpp"
#include "prefaudit/bt_reward.hpp"
#include "prefaudit/calibration.hpp"
#include "prefaudit/config.hpp"
#include "prefaudit/curves.hpp"
#include "prefaudit/dataset.hpp"
#include "prefaudit/error.hpp"
#include "prefaudit/features.hpp"
#include "prefaudit/noise.hpp"
#include "prefaudit/serialize.hpp"
#include "prefaudit/synthetic.hpp"

namespace py = pybind11;
namespace pa = prefaudit;

namespace {

// Structured results cross the boundary as the JSON the CLI writes; the
// Python package decodes them into dicts.
std::string dumps(const pa::Json& j) { return j.dump(); }

pa::TomlScalar to_scalar(const std::string& key, const py::handle& v) {
  if (py::isinstance<py::bool_>(v)) return v.cast<bool>();
  if (py::isinstance<py::int_>(v)) return v.cast<int64_t>();
  if (py::isinstance<py::float_>(v)) return v.cast<double>();
  if (py::isinstance<py::str>(v)) return v.cast<std::string>();
  throw pa::Error("config", "config key \"" + key + "\" has an unsupported value type");
}

void flatten(const py::dict& d, const std::string& prefix, pa::TomlDocument& doc) {
  for (const auto& [k, v] : d) {
    const std::string key = prefix + py::str(k).cast<std::string>();
    if (py::isinstance<py::dict>(v)) {
      flatten(v.cast<py::dict>(), key + ".", doc);
    } else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      std::vector<pa::TomlScalar> items;
      for (const auto& item : v) items.push_back(to_scalar(key, item));
      doc[key] = std::move(items);
    } else if (!v.is_none()) {
      const pa::TomlScalar s = to_scalar(key, v);
      std::visit([&](const auto& x) { doc[key] = x; }, s);
    }
  }
}

pa::AuditConfig config_from(const py::dict& settings) {
  pa::TomlDocument doc;
  flatten(settings, "", doc);
  pa::AuditConfig cfg;
  pa::apply_toml(doc, cfg);
  return cfg;
}

py::dict example_dict(const pa::PreferenceExample& ex) {
  py::dict d;
  d["id"] = ex.id;
  d["prompt"] = ex.prompt;
  d["chosen"] = ex.chosen;
  d["rejected"] = ex.rejected;
  d["meta"] = ex.meta;
  return d;
}

pa::FeatureSpec default_spec(const pa::Dataset& d, const pa::EmbeddingTable& e) {
  return pa::describe_features(d, e, "external", "");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Preference dataset audit core";
  m.attr("__version__") = PREFAUDIT_VERSION;

  static py::exception<pa::Error> error_type(m, "PrefauditError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const pa::Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      inst.attr("kind") = e.kind();
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  py::class_<pa::Dataset>(m, "Dataset")
      .def("__len__", &pa::Dataset::size)
      .def("ids", &pa::Dataset::ids)
      .def("__getitem__",
           [](const pa::Dataset& d, std::size_t i) {
             if (i >= d.size()) throw py::index_error();
             return example_dict(d[i]);
           })
      .def("examples",
           [](const pa::Dataset& d) {
             py::list out;
             for (const auto& ex : d.examples()) out.append(example_dict(ex));
             return out;
           })
      .def("filter_log",
           [](const pa::Dataset& d) { return dumps(pa::to_json(d.provenance().filters)); })
      .def("to_jsonl", [](const pa::Dataset& d) { return pa::dump_dataset(d); })
      .def("__eq__", [](const pa::Dataset& a, const pa::Dataset& b) { return a == b; });

  m.def("ingest",
        [](const std::filesystem::path& path, bool tie_error) {
          return pa::ingest(path, {tie_error ? pa::TiePolicy::kError : pa::TiePolicy::kDrop});
        },
        py::arg("path"), py::arg("tie_error") = false);
  m.def("ingest_text",
        [](const std::string& text, const std::string& source, bool tie_error) {
          return pa::ingest_text(text, source,
                                 {tie_error ? pa::TiePolicy::kError : pa::TiePolicy::kDrop});
        },
        py::arg("text"), py::arg("source") = "<string>", py::arg("tie_error") = false);
  m.def("length_filter", &pa::length_filter, py::arg("data"), py::arg("max_tokens") = 512);
  m.def("split",
        [](const pa::Dataset& d, double eval_fraction, uint64_t seed) {
          auto parts = pa::split(d, {eval_fraction, seed});
          return py::make_tuple(std::move(parts.train), std::move(parts.eval));
        },
        py::arg("data"), py::arg("eval_fraction") = 0.1, py::arg("seed") = 0);
  m.def("subsample", &pa::subsample, py::arg("data"), py::arg("fraction"), py::arg("seed") = 0);
  m.def("flip_labels",
        [](const pa::Dataset& d, double rate, uint64_t seed) { return pa::flip_labels(d, {rate, seed}); },
        py::arg("data"), py::arg("rate"), py::arg("seed") = 0);
  m.def("count_flips",
        [](const pa::Dataset& d, double rate, uint64_t seed) { return pa::count_flips(d, {rate, seed}); },
        py::arg("data"), py::arg("rate"), py::arg("seed") = 0);

  py::class_<pa::EmbeddingTable>(m, "EmbeddingTable")
      .def(py::init<std::size_t>(), py::arg("dim"))
      .def_property_readonly("dim", &pa::EmbeddingTable::dim)
      .def_property_readonly("normalized", &pa::EmbeddingTable::normalized)
      .def("__len__", &pa::EmbeddingTable::size)
      .def("keys", &pa::EmbeddingTable::keys)
      .def("insert", &pa::EmbeddingTable::insert, py::arg("key"), py::arg("vector"))
      .def("get",
           [](const pa::EmbeddingTable& t, const std::string& key) -> py::object {
             const auto* v = t.find_key(key);
             return v ? py::cast(*v) : py::none();
           })
      .def("to_jsonl", [](const pa::EmbeddingTable& t) { return pa::dump_embeddings(t); });

  m.def("load_embeddings",
        [](const std::filesystem::path& path, std::optional<std::size_t> expect_dim, bool renormalize) {
          return pa::load_embeddings(path, {expect_dim, renormalize});
        },
        py::arg("path"), py::arg("expect_dim") = py::none(), py::arg("renormalize") = false);
  m.def("hash_featurize", &pa::hash_featurize, py::arg("data"), py::arg("dim") = pa::kDefaultHashDim,
        py::arg("seed") = 0);
  m.def("cosine_similarity",
        [](const std::vector<double>& a, const std::vector<double>& b) { return pa::cosine_similarity(a, b); });
  m.def("_similarity_report",
        [](const pa::Dataset& d, const pa::EmbeddingTable& e, double threshold, std::size_t bins,
           bool per_example) {
          return dumps(pa::to_json(pa::similarity_report(d, e, threshold, bins, per_example)));
        },
        py::arg("data"), py::arg("embeddings"), py::arg("threshold") = pa::kDefaultSimilarityThreshold,
        py::arg("bins") = pa::kDefaultSimilarityBins, py::arg("per_example") = false);
  m.def("high_info_subset", &pa::high_info_subset, py::arg("data"), py::arg("embeddings"),
        py::arg("threshold"), py::arg("size"), py::arg("seed") = 0);

  py::class_<pa::TrainConfig>(m, "TrainConfig")
      .def(py::init([](double lr, std::size_t epochs, double l2, std::optional<std::size_t> batch_size,
                       uint64_t seed, std::optional<std::size_t> patience) {
             pa::TrainConfig c{lr, epochs, l2, batch_size, seed, patience};
             c.validate();
             return c;
           }),
           py::arg("learning_rate") = 0.1, py::arg("epochs") = 100, py::arg("l2") = 1e-4,
           py::arg("batch_size") = py::none(), py::arg("seed") = 0,
           py::arg("early_stop_patience") = py::none())
      .def_readwrite("learning_rate", &pa::TrainConfig::learning_rate)
      .def_readwrite("epochs", &pa::TrainConfig::epochs)
      .def_readwrite("l2", &pa::TrainConfig::l2)
      .def_readwrite("batch_size", &pa::TrainConfig::batch_size)
      .def_readwrite("seed", &pa::TrainConfig::seed)
      .def_readwrite("early_stop_patience", &pa::TrainConfig::early_stop_patience);

  py::class_<pa::RewardModel>(m, "RewardModel")
      .def_readonly("dim", &pa::RewardModel::dim)
      .def_readonly("weights", &pa::RewardModel::weights)
      .def_readonly("bias", &pa::RewardModel::bias)
      .def("score", [](const pa::RewardModel& m, const std::vector<double>& x) { return pa::score(m, x); })
      .def("to_json", [](const pa::RewardModel& m) { return dumps(pa::to_json(m)); })
      .def("save", [](const pa::RewardModel& m, const std::filesystem::path& p) { pa::save_model(m, p); })
      .def("__eq__", [](const pa::RewardModel& a, const pa::RewardModel& b) { return a == b; });
  m.def("load_model", &pa::load_model, py::arg("path"));
  m.def("zero_model", [](std::size_t dim) { return pa::RewardModel::zeros({"external", dim}); });
  m.def("linear_model", [](std::vector<double> weights, double bias) {
    pa::RewardModel m = pa::RewardModel::zeros({"external", weights.size()});
    m.weights = std::move(weights);
    m.bias = bias;
    return m;
  }, py::arg("weights"), py::arg("bias") = 0.0);

  m.def("sigmoid", &pa::sigmoid);
  m.def("win_probability", &pa::win_probability, py::arg("r_w"), py::arg("r_l"));
  m.def("loss_and_gradient",
        [](const std::vector<double>& weights, const std::vector<std::vector<double>>& chosen,
           const std::vector<std::vector<double>>& rejected, double l2) {
          if (chosen.size() != rejected.size()) {
            throw pa::Error("invalid_argument", "chosen and rejected row counts differ");
          }
          std::vector<pa::FeaturePair> batch;
          for (std::size_t i = 0; i < chosen.size(); ++i) batch.push_back({chosen[i], rejected[i]});
          pa::RewardModel model = pa::RewardModel::zeros({"external", weights.size()});
          model.weights = weights;
          const pa::LossGradient lg = pa::loss_and_gradient(model, batch, l2);
          return py::make_tuple(lg.loss, lg.grad_w, lg.grad_b);
        },
        py::arg("weights"), py::arg("chosen"), py::arg("rejected"), py::arg("l2") = 0.0);
  m.def("_train",
        [](const pa::Dataset& d, const pa::EmbeddingTable& e, const pa::TrainConfig& cfg,
           const std::optional<pa::Dataset>& eval) {
          const pa::TrainResult r = pa::train(d, e, cfg, eval ? &*eval : nullptr, default_spec(d, e));
          pa::Json history = pa::Json::array();
          for (const auto& s : r.history) history.push_back(pa::to_json(s));
          return py::make_tuple(r.model, dumps(history));
        },
        py::arg("data"), py::arg("embeddings"), py::arg("config"), py::arg("eval") = py::none());
  m.def("evaluate",
        [](const pa::RewardModel& model, const pa::Dataset& d, const pa::EmbeddingTable& e) {
          const pa::EvalResult r = pa::evaluate(model, d, e);
          py::list preds;
          for (const auto& p : r.predictions) preds.append(py::make_tuple(p.id, p.p_win, p.correct));
          return py::make_tuple(r.accuracy, preds);
        },
        py::arg("model"), py::arg("data"), py::arg("embeddings"));

  m.def("z_split", [](const std::vector<double>& p_wins) {
    std::vector<pa::PairPrediction> preds;
    for (double p : p_wins) preds.push_back({"", p, p > 0.5});
    py::list out;
    for (const auto& r : pa::z_split(preds)) out.append(py::make_tuple(r.p_first_wins, r.z));
    return out;
  });
  m.def("_ece",
        [](const std::vector<double>& probs, const std::vector<int>& labels, std::size_t bins) {
          if (probs.size() != labels.size()) throw pa::Error("invalid_argument", "probs and labels differ in length");
          std::vector<pa::ZRecord> rs;
          for (std::size_t i = 0; i < probs.size(); ++i) rs.push_back({"", probs[i], labels[i]});
          return dumps(pa::to_json(pa::ece(rs, bins)));
        },
        py::arg("probs"), py::arg("labels"), py::arg("bins") = pa::kDefaultEceBins);

  m.def("_noise_sweep",
        [](const pa::Dataset& train, const pa::Dataset& eval, const pa::EmbeddingTable& e,
           const std::vector<double>& rates, const pa::TrainConfig& cfg, uint64_t seed, std::size_t threads) {
          return dumps(pa::to_json(pa::noise_sweep(train, eval, e, rates, cfg, seed, threads)));
        },
        py::arg("train"), py::arg("eval"), py::arg("embeddings"), py::arg("rates") = pa::kDefaultNoiseRates,
        py::arg("config") = pa::TrainConfig{}, py::arg("seed") = 0, py::arg("threads") = 1);
  m.def("_calibration_vs_noise",
        [](const pa::Dataset& train, const pa::Dataset& eval, const pa::EmbeddingTable& e,
           const std::vector<double>& rates, const pa::TrainConfig& cfg, std::size_t bins, uint64_t seed,
           std::size_t threads) {
          pa::Json out = pa::Json::array();
          for (const auto& pt : pa::calibration_vs_noise(train, eval, e, rates, cfg, bins, seed, threads)) {
            out.push_back(pa::Json{{"rate", pt.rate}, {"ece", pt.ece}, {"report", pa::to_json(pt.report)}});
          }
          return dumps(out);
        },
        py::arg("train"), py::arg("eval"), py::arg("embeddings"), py::arg("rates") = pa::kDefaultNoiseRates,
        py::arg("config") = pa::TrainConfig{}, py::arg("bins") = pa::kDefaultEceBins, py::arg("seed") = 0,
        py::arg("threads") = 1);
  m.def("_scaling_sweep",
        [](const pa::Dataset& train, const pa::Dataset& eval, const pa::EmbeddingTable& e,
           const std::vector<double>& fractions, const pa::TrainConfig& cfg, uint64_t seed, std::size_t threads) {
          return dumps(pa::to_json(pa::scaling_sweep(train, eval, e, fractions, cfg, seed, std::nullopt, threads)));
        },
        py::arg("train"), py::arg("eval"), py::arg("embeddings"), py::arg("fractions") = pa::kDefaultFractions,
        py::arg("config") = pa::TrainConfig{}, py::arg("seed") = 0, py::arg("threads") = 1);
  m.def("_saturation",
        [](const std::string& curve, double target) {
          return dumps(pa::to_json(pa::saturation(pa::scaling_curve_from_json(pa::Json::parse(curve)), target)));
        },
        py::arg("curve"), py::arg("target") = pa::kDefaultSaturationTarget);
  m.def("_doubling_gain", [](const std::string& curve) {
    return pa::doubling_gain(pa::scaling_curve_from_json(pa::Json::parse(curve)));
  });
  m.def("_info_compare",
        [](const pa::Dataset& train, const pa::Dataset& eval, const pa::EmbeddingTable& e, double threshold,
           std::size_t size, const pa::TrainConfig& cfg, const std::vector<uint64_t>& seeds, std::size_t threads) {
          return dumps(pa::to_json(pa::info_compare(train, eval, e, threshold, size, cfg, seeds, threads)));
        },
        py::arg("train"), py::arg("eval"), py::arg("embeddings"), py::arg("threshold"), py::arg("size"),
        py::arg("config") = pa::TrainConfig{}, py::arg("seeds") = std::vector<uint64_t>{0, 1, 2, 3, 4},
        py::arg("threads") = 1);

  m.def("make_synthetic",
        [](std::size_t n, std::size_t dim, uint64_t seed, double weight_norm, bool separable,
           bool similarity_correlated, const std::string& id_prefix,
           std::optional<std::vector<double>> w_star) {
          pa::SyntheticSpec spec{n, dim, seed, weight_norm,
                                 separable ? pa::SyntheticLabels::kSeparable : pa::SyntheticLabels::kBradleyTerry,
                                 similarity_correlated, id_prefix};
          pa::SyntheticData s = w_star ? pa::make_synthetic(spec, *w_star) : pa::make_synthetic(spec);
          return py::make_tuple(std::move(s.data), std::move(s.embeddings), std::move(s.w_star));
        },
        py::arg("n") = 1000, py::arg("dim") = 16, py::arg("seed") = 0, py::arg("weight_norm") = 2.0,
        py::arg("separable") = false, py::arg("similarity_correlated") = false, py::arg("id_prefix") = "s",
        py::arg("w_star") = py::none());

  m.def("_run_audit",
        [](const py::dict& settings, bool write) {
          const pa::AuditConfig cfg = config_from(settings);
          pa::AuditOutput out;
          {
            py::gil_scoped_release release;
            out = pa::run_audit(cfg);
            if (write) pa::write_artifacts(out.files, cfg.out_dir);
          }
          return out.files.at("report.json");
        },
        py::arg("settings"), py::arg("write") = true);
}
