#include "indscale/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace indscale {

TuningTable tuning_summary(std::vector<TuningRow> rows, std::string label) {
  if (rows.empty()) throw std::invalid_argument("tuning_summary: no rows");
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
  TuningTable table{std::move(label), std::move(rows), 0};
  double best = -1.0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].mean_moved > best) {
      best = table.rows[i].mean_moved;
      table.argmax = i;
    }
  }
  for (auto& row : table.rows) row.normalized_efficiency = best > 0.0 ? row.mean_moved / best : 0.0;
  return table;
}

EssReport effective_sample_size(const Trace& trace) { return effective_sample_size(trace.values); }

EssReport effective_sample_size(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 100) throw std::invalid_argument("effective_sample_size: need at least 100 values");
  double mean = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("effective_sample_size: non-finite value");
    mean += v;
  }
  mean /= static_cast<double>(n);
  std::vector<double> centered(n);
  std::transform(values.begin(), values.end(), centered.begin(), [mean](double v) { return v - mean; });

  const auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += centered[i] * centered[i + lag];
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) throw std::invalid_argument("effective_sample_size: zero variance");

  double pair_sum_total = 0.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double rho_even = m == 0 ? 1.0 : autocov(2 * m) / c0;
    const double rho_odd = autocov(2 * m + 1) / c0;
    const double gamma = rho_even + rho_odd;
    if (gamma <= 0.0) break;
    pair_sum_total += gamma;
  }
  const double iact = std::max(1.0, 2.0 * pair_sum_total - 1.0);
  return {static_cast<double>(n) / iact, iact, n};
}

}  // namespace indscale
