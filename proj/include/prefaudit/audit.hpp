#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "prefaudit/bt_reward.hpp"
#include "prefaudit/config.hpp"
#include "prefaudit/dataset.hpp"
#include "prefaudit/features.hpp"
#include "prefaudit/serialize.hpp"

namespace prefaudit {

// Dataset after ingest + length filter, with the embedding table that backs
// both reward features and similarity analysis.
struct AuditInputs {
  Dataset data;
  EmbeddingTable embeddings{1};
  FeatureSpec features;
  std::string featurizer;  // e.g. "hashed-ngrams dim=512"
  std::vector<std::string> warnings;
};

AuditInputs load_inputs(const AuditConfig& cfg);

// Provenance block shared by every command's JSON output.
Json provenance_json(const AuditConfig& cfg, const AuditInputs& inputs);

// Relative path -> file contents, written in one pass at the end of a run.
using Artifacts = std::map<std::string, std::string>;

struct AuditOutput {
  Json report;
  Artifacts files;  // includes "report.json"
};

// The full audit: similarity, scaling + saturation, noise sweep with ECDFs,
// and calibration vs. noise. Byte-stable for fixed inputs and config.
AuditOutput run_audit(const AuditConfig& cfg);

void write_artifacts(const Artifacts& files, const std::filesystem::path& out_dir);

// Chart builders used by the audit and the single-purpose commands.
std::string plot_scaling(const ScalingCurve& c);
std::string plot_saturation(const SaturationCurve& c);
std::string plot_similarity(const SimilarityReport& r);
std::string plot_noise(const NoiseSweepResult& r);
std::string plot_ecdf(const std::vector<double>& rates,
                      const std::vector<std::vector<EcdfPoint>>& curves);
std::string plot_reliability(const std::vector<CalibrationPoint>& points);

}  // namespace prefaudit
