// Independent reference computations for tests. These deliberately avoid
// calling into the library beyond plain data types.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace prefaudit::testing {

struct OracleRecord {
  double p = 0.0;
  int z = 0;
};

// Equal-width ECE by scanning every bin over every record.
inline double brute_force_ece(const std::vector<OracleRecord>& records, std::size_t m_bins) {
  double total = 0.0;
  const double n = static_cast<double>(records.size());
  for (std::size_t m = 0; m < m_bins; ++m) {
    const double lo = static_cast<double>(m) / static_cast<double>(m_bins);
    const double hi = static_cast<double>(m + 1) / static_cast<double>(m_bins);
    double conf = 0.0, acc = 0.0, count = 0.0;
    for (const auto& r : records) {
      const bool inside = (m == 0 ? r.p >= lo : r.p > lo) && r.p <= hi;
      if (!inside) continue;
      conf += r.p;
      acc += r.z;
      count += 1.0;
    }
    if (count == 0.0) continue;
    total += count / n * std::abs(acc / count - conf / count);
  }
  return total;
}

inline std::size_t brute_force_bin(double p, std::size_t m_bins) {
  for (std::size_t m = 0; m < m_bins; ++m) {
    const double lo = static_cast<double>(m) / static_cast<double>(m_bins);
    const double hi = static_cast<double>(m + 1) / static_cast<double>(m_bins);
    if ((m == 0 ? p >= lo : p > lo) && p <= hi) return m;
  }
  return m_bins;
}

// -log(sigma(delta)) summed naively, plus the l2 penalty.
inline double naive_bt_loss(const std::vector<double>& w,
                            const std::vector<std::vector<double>>& xw,
                            const std::vector<std::vector<double>>& xl, double l2) {
  double total = 0.0;
  for (std::size_t i = 0; i < xw.size(); ++i) {
    double delta = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) delta += w[j] * (xw[i][j] - xl[i][j]);
    total += std::log1p(std::exp(-delta));
  }
  double sq = 0.0;
  for (double x : w) sq += x * x;
  return total / static_cast<double>(xw.size()) + 0.5 * l2 * sq;
}

// First fraction whose performance reaches `target`, or -1.
inline double first_reaching(const std::vector<double>& fractions,
                             const std::vector<double>& performance, double target) {
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (performance[i] >= target) return fractions[i];
  }
  return -1.0;
}

}  // namespace prefaudit::testing
