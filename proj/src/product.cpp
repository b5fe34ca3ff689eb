#include "indscale/product.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "indscale/parallel.hpp"
#include "indscale/sampler.hpp"
#include "indscale/scaling.hpp"

namespace indscale {

namespace {

std::vector<std::size_t> geometric(double lo, double hi, std::size_t points) {
  std::vector<std::size_t> out;
  if (points < 2 || hi <= lo) {
    out.push_back(static_cast<std::size_t>(std::llround(lo)));
    return out;
  }
  const double ratio = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i)
    out.push_back(static_cast<std::size_t>(std::llround(lo * std::exp(ratio * static_cast<double>(i)))));
  return out;
}

void tidy(std::vector<std::size_t>& grid, std::size_t n) {
  for (auto& k : grid) k = std::clamp<std::size_t>(k, 1, n);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
}

}  // namespace

ExperimentConfig ExperimentConfig::paper_scale(const PairSpec& pair) {
  ExperimentConfig config;
  config.pair = pair;
  config.n = 1000;
  config.iterations = 1'000'000;
  config.grid_points = 50;
  return config;
}

void ExperimentConfig::validate() const {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (iterations <= burn_in) throw std::invalid_argument("iterations must exceed burn_in");
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (k_grid.empty() && grid_points < 1) throw std::invalid_argument("grid_points must be >= 1");
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    if (k_grid[i] < 1 || k_grid[i] > n)
      throw std::invalid_argument("k_grid value " + std::to_string(k_grid[i]) + " outside [1, n]");
    if (i > 0 && k_grid[i] <= k_grid[i - 1])
      throw std::invalid_argument("k_grid must be strictly increasing");
  }
}

std::vector<std::size_t> default_k_grid(const DensityPair& pair, std::size_t n, std::size_t points,
                                        std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("default_k_grid: n must be >= 1");
  if (points < 1) throw std::invalid_argument("default_k_grid: need at least one point");
  const DiscrepancyResult disc = discrepancy(pair, 200'000, seed);
  std::vector<std::size_t> grid;
  if (!disc.finite()) {
    for (std::size_t k = 1; k <= std::min<std::size_t>(20, n); ++k) grid.push_back(k);
    if (n > 20) {
      const auto tail = geometric(20.0, static_cast<double>(n), std::max<std::size_t>(points / 2, 2));
      grid.insert(grid.end(), tail.begin() + 1, tail.end());
    }
  } else if (disc.value <= 0.0) {
    grid = geometric(1.0, static_cast<double>(n), points);
  } else {
    const double lo = std::max(1.0, std::floor(k_for_acceptance(disc.value, 0.95)));
    const double hi = std::min(static_cast<double>(n), std::ceil(k_for_acceptance(disc.value, 0.02)));
    if (hi - lo + 1.0 <= static_cast<double>(points)) {
      for (auto k = static_cast<std::size_t>(lo); k <= static_cast<std::size_t>(hi); ++k) grid.push_back(k);
    } else {
      grid = geometric(lo, hi, points > 2 ? points - 1 : points);
    }
    grid.push_back(optimal_k(disc.value, n));
  }
  tidy(grid, n);
  return grid;
}

TuningTable run_sweep(const ExperimentConfig& config) {
  config.validate();
  const DensityPair pair = DensityPair::from_spec(config.pair);
  const std::vector<std::size_t> grid =
      config.k_grid.empty() ? default_k_grid(pair, config.n, config.grid_points, config.seed) : config.k_grid;

  const std::size_t reps = config.replicates;
  std::vector<ChainResult> runs(grid.size() * reps);
  parallel_for(runs.size(), config.threads, [&](std::size_t job) {
    ChainConfig chain;
    chain.n = config.n;
    chain.k = grid[job / reps];
    chain.iterations = config.iterations;
    chain.burn_in = config.burn_in;
    chain.seed = derive_seed(config.seed, job);
    runs[job] = run_chain(pair, chain);
  });

  std::vector<TuningRow> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    double var = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& row = runs[g * reps + r].row;
      acc += row.acceptance;
      var += row.mc_se * row.mc_se;
    }
    TuningRow row;
    row.k = grid[g];
    row.acceptance = acc / static_cast<double>(reps);
    row.mean_moved = static_cast<double>(row.k) * row.acceptance;
    row.mc_se = std::sqrt(var) / static_cast<double>(reps);
    rows.push_back(row);
  }
  return tuning_summary(std::move(rows), pair.label());
}

EfficiencyComparison efficiency_vs_theory(const TuningTable& table) {
  if (table.rows.empty()) throw std::invalid_argument("efficiency_vs_theory: empty table");
  EfficiencyComparison out;
  for (const auto& row : table.rows) {
    if (!(row.acceptance > 0.0 && row.acceptance < 1.0)) {
      out.skipped_k.push_back(row.k);
      continue;
    }
    const EfficiencyPoint p{row.k, row.acceptance, row.normalized_efficiency, theoretical_efficiency(row.acceptance)};
    out.max_gap = std::max(out.max_gap, std::abs(p.observed - p.theoretical));
    out.points.push_back(p);
  }
  return out;
}

}  // namespace indscale
