#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "indscale/bdm.hpp"
#include "indscale/diagnostics.hpp"
#include "indscale/sir.hpp"

namespace indscale {

/// Missing, unreadable or malformed input. Messages name the file and, for
/// parse errors, the 1-based line.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One non-negative removal time per line; blank lines and `#` comments are
/// skipped. Times are sorted and the input order kept in original_index.
EpidemicData load_removal_times(const std::filesystem::path& path, std::size_t population);

/// Lines `size,count`; blank lines and `#` comments are skipped.
ClusterData load_clusters(const std::filesystem::path& path);

/// Shortest decimal that round-trips, "nan" / "inf" / "-inf" otherwise.
std::string format_number(double value);

/// Columns k, acceptance, acceptance_se, mean_moved, normalized_efficiency,
/// theoretical_efficiency (nan where the acceptance is 0 or 1).
std::string tuning_csv(const TuningTable& table);
void write_tuning_csv(const TuningTable& table, const std::filesystem::path& path);
TuningTable read_tuning_csv(const std::filesystem::path& path);

/// Columns iteration, then one per trace; rows stop at the shortest trace.
/// `thin` is the iteration spacing the traces were recorded at.
std::string trace_csv(const std::vector<Trace>& traces, std::size_t thin = 1);
void write_trace_csv(const std::vector<Trace>& traces, const std::filesystem::path& path, std::size_t thin = 1);

/// Columns label, n, iact, ess.
std::string ess_csv(const std::vector<std::pair<std::string, EssReport>>& reports);
void write_ess_csv(const std::vector<std::pair<std::string, EssReport>>& reports, const std::filesystem::path& path);

/// Writes `text` verbatim (binary mode, so '\n' stays '\n').
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace indscale
