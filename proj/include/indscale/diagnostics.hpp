#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace indscale {

/// One block size k of a tuning experiment.
struct TuningRow {
  std::size_t k = 1;
  double acceptance = 0.0;
  double mean_moved = 0.0;             // k * acceptance
  double normalized_efficiency = 0.0;  // mean_moved / max over the table
  double mc_se = 0.0;                  // standard error of `acceptance`
};

struct TuningTable {
  std::string label;
  std::vector<TuningRow> rows;
  std::size_t argmax = 0;  // row index with the largest mean_moved

  const TuningRow& best() const { return rows.at(argmax); }
};

/// Sorts by k, normalizes mean_moved by the table maximum and records the
/// arg-max (first row on ties). Throws on an empty row set.
TuningTable tuning_summary(std::vector<TuningRow> rows, std::string label = {});

struct Trace {
  std::vector<double> values;
  std::string label;
};

struct EssReport {
  double ess = 0.0;
  double iact = 1.0;  // integrated autocorrelation time, floored at 1
  std::size_t n = 0;
};

/// ESS with Geyer's initial positive sequence: iact = 1 + 2 sum rho_t, the sum
/// truncated at the first non-positive pair rho_{2m} + rho_{2m+1}.
/// Needs n >= 100 finite values; throws "zero variance" on a constant trace.
EssReport effective_sample_size(const Trace& trace);
EssReport effective_sample_size(std::span<const double> values);

}  // namespace indscale
