#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "indscale/densities.hpp"
#include "indscale/diagnostics.hpp"

namespace indscale {

/// k-grid sweep of the block sampler on an n-fold product target.
struct ExperimentConfig {
  PairSpec pair{PairSpec::Family::gaussian, 1.2};
  std::size_t n = 1000;
  std::vector<std::size_t> k_grid;  // empty: default_k_grid(pair, n, grid_points)
  std::size_t grid_points = 10;
  std::uint64_t iterations = 100'000;
  std::uint64_t burn_in = 0;
  std::uint64_t seed = 1;
  std::size_t replicates = 3;
  std::size_t threads = 1;

  /// n = 1000, 1e6 iterations, 50-point grid.
  static ExperimentConfig paper_scale(const PairSpec& pair);

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// One run_chain per (k, replicate), each on its own seed. Acceptance is the
/// replicate mean; its SE combines the per-run batch-means SEs.
TuningTable run_sweep(const ExperimentConfig& config);

/// Grid of block sizes spanning predicted acceptance 0.95 down to 0.02, via
/// the inverse of 2 Phi(-sqrt(kI/2)), with optimal_k(I, n) always included.
/// Divergent I: {1, ..., min(20, n)} followed by a geometric tail up to n.
/// I = 0: geometric from 1 to n.
std::vector<std::size_t> default_k_grid(const DensityPair& pair, std::size_t n, std::size_t points = 10,
                                        std::uint64_t seed = 1);

struct EfficiencyPoint {
  std::size_t k = 0;
  double acceptance = 0.0;
  double observed = 0.0;     // normalized efficiency from the sweep
  double theoretical = 0.0;  // theoretical_efficiency(acceptance)
};

struct EfficiencyComparison {
  std::vector<EfficiencyPoint> points;
  double max_gap = 0.0;
  std::vector<std::size_t> skipped_k;  // rows with acceptance 0 or 1
};

/// Observed vs theoretical normalized efficiency per row. Throws on an empty table.
EfficiencyComparison efficiency_vs_theory(const TuningTable& table);

}  // namespace indscale
