#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefaudit/bt_reward.hpp"
#include "prefaudit/noise.hpp"

namespace prefaudit {

// One ordered view (x, y1, y2, z) of an evaluated pair: p_first_wins is the
// model's P(y1 beats y2), z = 1 iff y1 is the true chosen response.
struct ZRecord {
  std::string id;
  double p_first_wins = 0.5;
  int z = 0;

  bool operator==(const ZRecord&) const = default;
};

// Each prediction with p_win = q becomes (q, z=1) and (1 - q, z=0). Below
// 0.5, q is replaced by 1 - (1 - q) so the pair is an exact mirror.
std::vector<ZRecord> z_split(std::span<const PairPrediction> predictions);

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::optional<double> conf;  // empty bins carry no conf/acc
  std::optional<double> acc;

  bool operator==(const CalibrationBin&) const = default;
};

struct CalibrationReport {
  std::vector<CalibrationBin> bins;
  double ece = 0.0;
  std::size_t n_records = 0;

  bool operator==(const CalibrationReport&) const = default;
};

inline constexpr std::size_t kDefaultEceBins = 10;

// Bin m of M covers (m/M, (m+1)/M]; bin 0 also includes 0.
std::size_t calibration_bin_index(double p, std::size_t m_bins);

// Equal-width ECE: sum over occupied bins of |B|/n * |acc(B) - conf(B)|.
CalibrationReport ece(std::span<const ZRecord> records,
                      std::size_t m_bins = kDefaultEceBins);

struct ReliabilityRow {
  double bin_mid = 0.0;
  double conf = 0.0;
  double acc = 0.0;
  std::size_t count = 0;
};

// Occupied bins only, ascending by bin midpoint.
std::vector<ReliabilityRow> reliability_data(const CalibrationReport& report);

struct CalibrationPoint {
  double rate = 0.0;
  double ece = 0.0;
  CalibrationReport report;
};

CalibrationPoint calibrate_point(const NoisePoint& point, std::size_t m_bins);

std::vector<CalibrationPoint> calibration_vs_noise(
    const Dataset& train_set, const Dataset& eval_set, const EmbeddingTable& e,
    const std::vector<double>& rates, const TrainConfig& cfg,
    std::size_t m_bins, uint64_t seed, std::size_t threads = 1);

}  // namespace prefaudit
