#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "indscale/densities.hpp"
#include "indscale/diagnostics.hpp"
#include "indscale/rng.hpp"

namespace indscale {

/// Position of an n-component product chain together with g(x_i) per
/// component, so a block move costs O(k) whatever n is.
struct ChainState {
  std::vector<double> x;
  std::vector<double> cached_log_weight;
  std::uint64_t iteration = 0;

  /// Every component drawn from the target.
  static ChainState stationary(const DensityPair& pair, std::size_t n, Rng& rng);
  static ChainState from_values(const DensityPair& pair, std::vector<double> values);

  std::size_t size() const { return x.size(); }
  bool cache_consistent(const DensityPair& pair) const;
  void refresh_cache(const DensityPair& pair);
};

struct StepRecord {
  bool accepted = false;
  std::size_t k = 0;
  double log_ratio = 0.0;
};

/// Draws k of n indices uniformly without replacement by a partial
/// Fisher-Yates shuffle over a persistent permutation.
class BlockSelector {
 public:
  explicit BlockSelector(std::size_t n);

  std::span<const std::size_t> select(std::size_t k, Rng& rng);
  std::size_t size() const { return perm_.size(); }

 private:
  std::vector<std::size_t> perm_;
};

/// log of prod_j omega(y_j) / omega(x_{I_j}) over the selected indices only.
double block_log_ratio(const ChainState& state, const DensityPair& pair,
                       std::span<const std::size_t> indices, std::span<const double> proposed);

/// Accepts the forced proposal iff log_u < log ratio, updating values and
/// caches of the selected components on acceptance.
StepRecord apply_block_proposal(ChainState& state, const DensityPair& pair,
                                std::span<const std::size_t> indices, std::span<const double> proposed,
                                double log_u);

/// The k-component block independence sampler for a product target.
class BlockIndependenceSampler {
 public:
  BlockIndependenceSampler(DensityPair pair, std::size_t n);

  /// One all-or-nothing block move. Throws std::out_of_range unless 1 <= k <= n.
  StepRecord step(ChainState& state, std::size_t k, Rng& rng);

  /// Indices proposed by the last call to step().
  std::span<const std::size_t> last_indices() const { return last_; }
  const DensityPair& pair() const { return pair_; }

 private:
  DensityPair pair_;
  BlockSelector selector_;
  std::span<const std::size_t> last_;
  std::vector<double> proposed_;
  std::vector<double> proposed_weight_;
};

/// Single step with a throwaway selector; prefer BlockIndependenceSampler in loops.
StepRecord block_independence_step(ChainState& state, const DensityPair& pair, std::size_t k, Rng& rng);

/// Random walk Metropolis on R^d with a spherical Gaussian increment scaled
/// per coordinate. The cached log target must be finite.
struct RwmState {
  std::vector<double> x;
  double log_target = 0.0;
};

template <class LogTarget>
StepRecord rwm_step(RwmState& state, LogTarget&& log_target, std::span<const double> scale, Rng& rng) {
  std::vector<double> proposal(state.x);
  for (std::size_t i = 0; i < proposal.size(); ++i) proposal[i] += scale[i] * std_normal(rng);
  const double proposed_log_target = log_target(std::span<const double>(proposal));
  StepRecord record{false, proposal.size(), proposed_log_target - state.log_target};
  if (std::isnan(record.log_ratio) || proposed_log_target == -INFINITY) {
    record.log_ratio = -INFINITY;
    return record;
  }
  if (std::log(uniform01(rng)) < record.log_ratio) {
    state.x = std::move(proposal);
    state.log_target = proposed_log_target;
    record.accepted = true;
  }
  return record;
}

enum class StartMode { stationary, custom };

struct ChainConfig {
  std::size_t n = 1000;
  std::size_t k = 1;
  std::uint64_t iterations = 100'000;
  std::uint64_t burn_in = 0;
  std::uint64_t seed = 1;
  StartMode start = StartMode::stationary;
  std::vector<double> custom_start;  // used when start == custom
  std::uint64_t trace_thin = 0;      // record component 1 every trace_thin steps; 0 disables
};

struct ChainResult {
  TuningRow row;  // normalized_efficiency left at 0; see tuning_summary
  std::uint64_t accepted = 0;
  std::uint64_t recorded = 0;
  std::optional<Trace> trace;
};

/// Runs iterations steps and measures acceptance over the post burn-in part.
/// The acceptance standard error uses batch means. Reproducible from the seed.
ChainResult run_chain(const DensityPair& pair, const ChainConfig& config);

}  // namespace indscale
