#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "indscale/diagnostics.hpp"
#include "indscale/rng.hpp"
#include "indscale/sampler.hpp"

namespace indscale {

// Birth-death-mutation branching process with infinite alleles, phi = 1:
// each event is a birth (prob a), a death (prob d) or a mutation of one
// individual to a brand-new type (prob 1 - a - d). The process starts from a
// single individual and stops when the population first reaches N_T.
//
// Non-centred form: event i reads u_i for its type and w_i for the affected
// individual, idx = ceil(w_i * total) in the canonical order (types by
// creation, then insertion within a type).

/// Observed cluster-size distribution: `count` genotypes seen `size` times.
struct ClusterData {
  struct Cluster {
    std::size_t size = 0;
    std::size_t count = 0;
  };
  std::vector<Cluster> clusters;  // distinct sizes, ascending

  /// Sorts by size; throws on zero or repeated sizes and zero counts.
  static ClusterData from_clusters(std::vector<Cluster> clusters);
  /// Tallies the cluster sizes of a sample, e.g. {3, 1, 1} -> {(1, 2), (3, 1)}.
  static ClusterData from_sizes(std::span<const std::size_t> sizes);

  std::size_t sample_size() const;   // sum size * count
  std::size_t cluster_count() const;  // sum count
  void validate() const;
};

struct BdmParams {
  double a = 0.5;  // birth
  double d = 0.25;  // death

  bool valid() const { return a > 0.0 && d > 0.0 && a + d < 1.0; }
};

enum class BdmStatus { success, extinct, latent_exhausted };

struct BdmPopulation {
  BdmStatus status = BdmStatus::success;
  std::vector<std::size_t> type_counts;  // living types in creation order
  std::size_t total = 0;
  std::size_t events_used = 0;
  std::size_t births = 0;
  std::size_t deaths = 0;
  std::size_t mutations = 0;
};

/// Pure function of its inputs. Throws on invalid params, target_size < 1 or
/// u, w of different lengths.
BdmPopulation simulate_bdm(const BdmParams& params, std::span<const double> u, std::span<const double> w,
                           std::size_t target_size);

struct ObsEstimate {
  double log_value = 0.0;  // -inf when the data cannot be produced
  bool population_too_small = false;
};

/// Number of uniforms estimate_obs_loglik reads: n_rep * cluster_count.
std::size_t obs_v_length(const ClusterData& data, std::size_t n_rep);

/// Log of an unbiased estimate of P(sample partition = data | population),
/// the sample being sample_size individuals drawn without replacement.
/// Each of the n_rep blocks of v runs sequential importance sampling over
/// injective assignments of observed clusters (largest first) to unused
/// types, choosing a type with weight C(N_t, s) and multiplying the running
/// weight by the sum of those weights; the blocks are averaged and the result
/// divided by prod_s count_s! * C(N_T, sample_size).
ObsEstimate estimate_obs_loglik(const BdmPopulation& pop, const ClusterData& data, std::span<const double> v,
                                std::size_t n_rep);

struct BdmModel {
  ClusterData data;
  std::size_t target_size = 500;
  std::size_t n_rep = 25;
};

struct BdmLatentState {
  std::vector<double> u;
  std::vector<double> w;
  std::vector<double> v;
  BdmParams params;
  BdmPopulation population;
  double loglik = 0.0;
};

/// Fresh uniforms until the state has a finite likelihood estimate.
/// Throws std::runtime_error after max_attempts.
BdmLatentState initial_bdm_state(const BdmModel& model, const BdmParams& params, std::size_t n_latent, Rng& rng,
                                 std::size_t max_attempts = 100'000);

/// Log likelihood estimate of the given latents: simulate, then estimate.
double bdm_loglik(const BdmModel& model, const BdmParams& params, std::span<const double> u,
                  std::span<const double> w, std::span<const double> v, BdmPopulation* pop = nullptr);

/// Fresh U(0,1) values at k positions of u and, independently chosen, k
/// positions of w; accepted with min{1, exp(loglik' - loglik)}.
StepRecord update_latents_block(BdmLatentState& state, const BdmModel& model, std::size_t k,
                                BlockSelector& selector, Rng& rng);
StepRecord update_latents_block(BdmLatentState& state, const BdmModel& model, std::size_t k, Rng& rng);

/// Same for k_v positions of v, keeping the population. k_v = 0 is a no-op.
StepRecord update_v_block(BdmLatentState& state, const BdmModel& model, std::size_t k_v, BlockSelector& selector,
                          Rng& rng);
StepRecord update_v_block(BdmLatentState& state, const BdmModel& model, std::size_t k_v, Rng& rng);

/// Gaussian random walk on (a, d) at fixed latents, flat prior on the
/// triangle a, d > 0, a + d < 1.
StepRecord update_params_rwm(BdmLatentState& state, const BdmModel& model, double scale_a, double scale_d,
                             Rng& rng);

struct BdmRunConfig {
  std::size_t n_latent = 6'000;
  std::size_t k = 100;
  std::size_t k_v = 0;  // 0: one block's worth, cluster_count()
  std::uint64_t iterations = 100'000;
  std::uint64_t burn_in = 10'000;
  std::uint64_t seed = 1;
  BdmParams start;
  double scale_a = 0.03;
  double scale_d = 0.03;
  std::uint64_t trace_thin = 1;
};

struct BdmRunResult {
  TuningRow row;  // latent block step, post burn-in
  Trace a;
  Trace d;
  EssReport ess_a;
  EssReport ess_d;
  double param_acceptance = 0.0;
  double v_acceptance = 0.0;
  BdmLatentState final_state;
};

/// Cycles update_params_rwm, update_latents_block and update_v_block.
BdmRunResult run_bdm_mcmc(const BdmModel& model, const BdmRunConfig& config);

struct BdmSweep {
  TuningTable table;
  std::vector<EssReport> ess_a;  // aligned with table.rows
  std::vector<EssReport> ess_d;
};

BdmSweep run_bdm_sweep(const BdmModel& model, const BdmRunConfig& config, const std::vector<std::size_t>& k_grid,
                       std::size_t threads = 1);

/// Simulates a population of target_size under params and tallies the
/// clusters of a uniform sample of sample_size individuals.
ClusterData synthetic_clusters(const BdmParams& params, std::size_t target_size, std::size_t sample_size,
                               std::uint64_t seed);

}  // namespace indscale
