#include "indscale/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "indscale/scaling.hpp"

namespace indscale {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Reads non-empty, comment-stripped lines as (line number, text).
std::vector<std::pair<std::size_t, std::string>> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path.string() + "'");
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (!view.empty()) out.emplace_back(number, std::string(view));
  }
  return out;
}

[[noreturn]] void parse_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view text, const std::filesystem::path& path, std::size_t line) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    parse_error(path, line, "expected a number, got '" + std::string(text) + "'");
  return value;
}

std::size_t parse_count(std::string_view text, const std::filesystem::path& path, std::size_t line) {
  text = trim(text);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    parse_error(path, line, "expected a non-negative integer, got '" + std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto pos = line.find(sep);
    out.push_back(line.substr(0, pos));
    if (pos == std::string_view::npos) break;
    line.remove_prefix(pos + 1);
  }
  return out;
}

}  // namespace

EpidemicData load_removal_times(const std::filesystem::path& path, std::size_t population) {
  std::vector<double> times;
  for (const auto& [number, text] : read_lines(path)) {
    const double t = parse_double(text, path, number);
    if (!std::isfinite(t) || t < 0.0) parse_error(path, number, "removal time must be finite and non-negative");
    times.push_back(t);
  }
  if (times.empty()) throw DataError(path.string() + ": no removal times");
  try {
    return EpidemicData::from_times(std::move(times), population);
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ClusterData load_clusters(const std::filesystem::path& path) {
  std::vector<ClusterData::Cluster> clusters;
  for (const auto& [number, text] : read_lines(path)) {
    const auto fields = split(text, ',');
    if (fields.size() != 2) parse_error(path, number, "expected 'size,count'");
    clusters.push_back({parse_count(fields[0], path, number), parse_count(fields[1], path, number)});
  }
  try {
    return ClusterData::from_clusters(std::move(clusters));
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string tuning_csv(const TuningTable& table) {
  std::string out = "k,acceptance,acceptance_se,mean_moved,normalized_efficiency,theoretical_efficiency\n";
  for (const auto& row : table.rows) {
    const double theory = (row.acceptance > 0.0 && row.acceptance < 1.0) ? theoretical_efficiency(row.acceptance)
                                                                         : std::nan("");
    out += std::to_string(row.k) + ',' + format_number(row.acceptance) + ',' + format_number(row.mc_se) + ',' +
           format_number(row.mean_moved) + ',' + format_number(row.normalized_efficiency) + ',' +
           format_number(theory) + '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void write_tuning_csv(const TuningTable& table, const std::filesystem::path& path) {
  write_text(path, tuning_csv(table));
}

TuningTable read_tuning_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("k,acceptance", 0) != 0)
    throw DataError(path.string() + ":1: not a tuning table header");
  std::vector<TuningRow> rows;
  for (std::size_t number = 2; std::getline(in, line); ++number) {
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 6) parse_error(path, number, "expected 6 columns");
    TuningRow row;
    row.k = parse_count(fields[0], path, number);
    row.acceptance = parse_double(fields[1], path, number);
    row.mc_se = parse_double(fields[2], path, number);
    row.mean_moved = parse_double(fields[3], path, number);
    rows.push_back(row);
  }
  if (rows.empty()) throw DataError(path.string() + ": no rows");
  TuningTable table = tuning_summary(std::move(rows), path.stem().string());
  return table;
}

std::string trace_csv(const std::vector<Trace>& traces, std::size_t thin) {
  std::string out = "iteration";
  std::size_t len = traces.empty() ? 0 : traces.front().values.size();
  for (const auto& t : traces) {
    out += ',' + (t.label.empty() ? std::string("value") : t.label);
    len = std::min(len, t.values.size());
  }
  out += '\n';
  for (std::size_t i = 0; i < len; ++i) {
    out += std::to_string(i * thin);
    for (const auto& t : traces) out += ',' + format_number(t.values[i]);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::vector<Trace>& traces, const std::filesystem::path& path, std::size_t thin) {
  write_text(path, trace_csv(traces, thin));
}

std::string ess_csv(const std::vector<std::pair<std::string, EssReport>>& reports) {
  std::string out = "label,n,iact,ess\n";
  for (const auto& [label, r] : reports)
    out += label + ',' + std::to_string(r.n) + ',' + format_number(r.iact) + ',' + format_number(r.ess) + '\n';
  return out;
}

void write_ess_csv(const std::vector<std::pair<std::string, EssReport>>& reports, const std::filesystem::path& path) {
  write_text(path, ess_csv(reports));
}

}  // namespace indscale
