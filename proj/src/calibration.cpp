#include "prefaudit/calibration.hpp"

#include <cmath>

#include "prefaudit/error.hpp"

namespace prefaudit {

std::vector<ZRecord> z_split(std::span<const PairPrediction> predictions) {
  if (predictions.empty()) throw Error("invalid_argument", "z_split of no predictions");
  std::vector<ZRecord> out;
  out.reserve(2 * predictions.size());
  for (const auto& p : predictions) {
    // 1 - x is exact on [0.5, 1].
    if (p.p_win >= 0.5) {
      out.push_back({p.id, p.p_win, 1});
      out.push_back({p.id, 1.0 - p.p_win, 0});
    } else {
      const double upper = 1.0 - p.p_win;
      out.push_back({p.id, 1.0 - upper, 1});
      out.push_back({p.id, upper, 0});
    }
  }
  return out;
}

std::size_t calibration_bin_index(double p, std::size_t m_bins) {
  const auto m = static_cast<double>(m_bins);
  auto edge = [m](std::size_t k) { return static_cast<double>(k) / m; };
  const double guess = std::ceil(p * m) - 1.0;
  std::size_t k = guess <= 0.0 ? 0 : std::min(m_bins - 1, static_cast<std::size_t>(guess));
  // Settle the estimate against the exact edges k/M used to report bins.
  while (k > 0 && p <= edge(k)) --k;
  while (k + 1 < m_bins && p > edge(k + 1)) ++k;
  return k;
}

CalibrationReport ece(std::span<const ZRecord> records, std::size_t m_bins) {
  if (m_bins == 0) throw Error("invalid_argument", "ECE needs at least one bin");
  std::vector<double> conf_sum(m_bins, 0.0);
  std::vector<double> z_sum(m_bins, 0.0);
  std::vector<std::size_t> count(m_bins, 0);
  for (const auto& r : records) {
    if (!(r.p_first_wins >= 0.0 && r.p_first_wins <= 1.0)) {
      throw Error("invalid_argument", "probability outside [0, 1] for id \"" + r.id + "\"");
    }
    const std::size_t k = calibration_bin_index(r.p_first_wins, m_bins);
    conf_sum[k] += r.p_first_wins;
    z_sum[k] += r.z;
    ++count[k];
  }

  CalibrationReport report;
  report.n_records = records.size();
  report.bins.resize(m_bins);
  const auto m = static_cast<double>(m_bins);
  const auto n = static_cast<double>(records.size());
  for (std::size_t k = 0; k < m_bins; ++k) {
    auto& bin = report.bins[k];
    bin.lo = static_cast<double>(k) / m;
    bin.hi = static_cast<double>(k + 1) / m;
    bin.count = count[k];
    if (count[k] == 0) continue;
    const auto c = static_cast<double>(count[k]);
    bin.conf = conf_sum[k] / c;
    bin.acc = z_sum[k] / c;
    report.ece += (c / n) * std::abs(*bin.acc - *bin.conf);
  }
  return report;
}

std::vector<ReliabilityRow> reliability_data(const CalibrationReport& report) {
  std::vector<ReliabilityRow> rows;
  for (const auto& bin : report.bins) {
    if (bin.count == 0) continue;
    rows.push_back({0.5 * (bin.lo + bin.hi), *bin.conf, *bin.acc, bin.count});
  }
  return rows;
}

CalibrationPoint calibrate_point(const NoisePoint& point, std::size_t m_bins) {
  CalibrationPoint out;
  out.rate = point.rate;
  out.report = ece(z_split(point.eval.predictions), m_bins);
  out.ece = out.report.ece;
  return out;
}

std::vector<CalibrationPoint> calibration_vs_noise(
    const Dataset& train_set, const Dataset& eval_set, const EmbeddingTable& e,
    const std::vector<double>& rates, const TrainConfig& cfg,
    std::size_t m_bins, uint64_t seed, std::size_t threads) {
  if (m_bins == 0) throw Error("invalid_argument", "ECE needs at least one bin");
  const FeatureSpec spec = describe_features(train_set, e, "external", "");
  std::vector<CalibrationPoint> out;
  for (const auto& point :
       run_noise_points(train_set, eval_set, e, rates, cfg, seed, spec, threads)) {
    out.push_back(calibrate_point(point, m_bins));
  }
  return out;
}

}  // namespace prefaudit
