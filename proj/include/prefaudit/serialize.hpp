#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefaudit/bt_reward.hpp"
#include "prefaudit/calibration.hpp"
#include "prefaudit/curves.hpp"
#include "prefaudit/dataset.hpp"
#include "prefaudit/features.hpp"
#include "prefaudit/noise.hpp"

namespace prefaudit {

using Json = nlohmann::ordered_json;

// Major.minor of the report/model layout. Loaders reject other majors.
inline constexpr const char* kSchemaVersion = "1.0";
inline constexpr int kSchemaMajor = 1;

// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

Json to_json(const FilterLog& log);
Json to_json(const Provenance& p);
Json to_json(const TrainConfig& cfg);
Json to_json(const FeatureSpec& spec);
Json to_json(const RewardModel& m);
Json to_json(const EpochStats& s);
Json to_json(const ScalingCurve& c);
Json to_json(const SaturationCurve& c);
Json to_json(const NoiseSweepResult& r);
Json to_json(const SimilarityReport& r);
Json to_json(const CalibrationReport& r);
Json to_json(const InfoCompareResult& r);
Json to_json(const std::vector<EcdfPoint>& ecdf);

TrainConfig train_config_from_json(const Json& j);
FeatureSpec feature_spec_from_json(const Json& j);
RewardModel model_from_json(const Json& j);
ScalingCurve scaling_curve_from_json(const Json& j);
SaturationCurve saturation_curve_from_json(const Json& j);
NoiseSweepResult noise_sweep_from_json(const Json& j);
SimilarityReport similarity_report_from_json(const Json& j);
CalibrationReport calibration_report_from_json(const Json& j);

// Model file: {"schema_version", "dim", "weights", "bias", "feature_spec",
// "train_meta"}.
void save_model(const RewardModel& m, const std::filesystem::path& path);
RewardModel load_model(const std::filesystem::path& path);

// Throws unless j["schema_version"] has major kSchemaMajor.
void check_schema_version(const Json& j);
Json load_report(const std::filesystem::path& path);

// Canonical JSONL, one example per line, meta omitted when empty.
std::string dump_dataset(const Dataset& d);

// CSV tables written by the CLI.
std::string scaling_csv(const ScalingCurve& c);
std::string saturation_csv(const SaturationCurve& c);
std::string noise_csv(const NoiseSweepResult& r);
std::string calibration_csv(const std::vector<CalibrationPoint>& points);
std::string info_compare_csv(const InfoCompareResult& r);
std::string similarity_csv(const SimilarityReport& r);
std::string ecdf_csv(const std::vector<double>& rates,
                     const std::vector<std::vector<EcdfPoint>>& curves);

void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace prefaudit
