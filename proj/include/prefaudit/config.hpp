#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "prefaudit/bt_reward.hpp"
#include "prefaudit/calibration.hpp"
#include "prefaudit/curves.hpp"
#include "prefaudit/dataset.hpp"
#include "prefaudit/features.hpp"
#include "prefaudit/noise.hpp"
#include "prefaudit/serialize.hpp"

namespace prefaudit {

// Values of the TOML subset accepted for config files: strings, integers,
// floats, booleans and single-line arrays of those, under [table] headers.
using TomlScalar = std::variant<std::string, int64_t, double, bool>;
using TomlValue = std::variant<std::string, int64_t, double, bool, std::vector<TomlScalar>>;

// Flattened "table.key" -> value.
using TomlDocument = std::map<std::string, TomlValue>;

TomlDocument parse_toml(const std::string& text, const std::string& source);

// Every knob of the toolkit. Defaults apply first, then a config file, then
// command-line flags.
struct AuditConfig {
  std::string data;
  std::optional<std::string> embeddings;
  bool renormalize = false;
  std::string out_dir = "prefaudit-out";
  uint64_t seed = 0;
  double eval_fraction = 0.1;
  std::size_t max_tokens = 512;
  TiePolicy tie_policy = TiePolicy::kDrop;
  std::vector<double> noise_rates = kDefaultNoiseRates;
  std::vector<double> fractions = kDefaultFractions;
  std::size_t bins = kDefaultSimilarityBins;
  std::size_t ece_bins = kDefaultEceBins;
  double threshold = kDefaultSimilarityThreshold;
  double saturation_target = kDefaultSaturationTarget;
  std::size_t hash_dim = kDefaultHashDim;
  std::size_t ecdf_grid = 101;
  std::size_t threads = 1;
  TrainConfig train;
  std::optional<std::size_t> info_size;
  std::vector<uint64_t> info_seeds = {0, 1, 2, 3, 4};
  std::string model = "model.json";
};

// Applies recognised keys; unknown keys are an error.
void apply_toml(const TomlDocument& doc, AuditConfig& cfg);
AuditConfig load_config(const std::filesystem::path& path, AuditConfig base = {});

Json to_json(const AuditConfig& cfg);

std::vector<double> parse_number_list(const std::string& text);

}  // namespace prefaudit
