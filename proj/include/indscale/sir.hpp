#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "indscale/diagnostics.hpp"
#include "indscale/rng.hpp"
#include "indscale/sampler.hpp"

namespace indscale {

// General stochastic epidemic in a closed population of N: one initial
// infective, Poisson contacts at rate beta spread uniformly over the whole
// population, Gamma(alpha, delta) infectious periods (delta is a rate).
// Removal times R are observed; infection times I are latent.
//
// Log likelihood implemented (kappa = index of the earliest infection):
//   (m - 1) log(beta / N) + sum_{j != kappa} log Inf(I_j-) - (beta / N) E
//     + sum_j log Gamma(R_j - I_j; alpha, delta)
// with Inf(t-) = #{i : I_i < t <= R_i} and the exposure
//   E = sum_i sum_j [min(R_i, I_j) - min(I_i, I_j)] + (N - m) sum_i (R_i - I_i),
// which equals the integral of S(t) Inf(t) dt.

struct EpidemicData {
  std::vector<double> removal_times;  // non-decreasing
  std::size_t population = 0;
  // removal_times[i] came from input position original_index[i]
  std::vector<std::size_t> original_index;

  /// Sorts `times` and records the permutation. Throws on negative or
  /// non-finite times and on N < m.
  static EpidemicData from_times(std::vector<double> times, std::size_t population);

  std::size_t size() const { return removal_times.size(); }
  void validate() const;
};

struct SirParams {
  double beta = 1.0;
  double alpha = 1.0;
  double delta = 1.0;
};

/// Gamma(shape, rate) priors. Exponential(rate) is shape 1.
struct GammaPrior {
  double shape = 1.0;
  double rate = 1e-3;
};

struct SirPriors {
  GammaPrior beta;
  GammaPrior delta;
  GammaPrior alpha;  // used only when alpha is unknown
};

struct SirState {
  std::vector<double> infection_times;  // aligned with data.removal_times
  SirParams params;
  double exposure = 0.0;                // E, maintained incrementally
  double log_infection_pressure = 0.0;  // sum_{j != kappa} log Inf(I_j-), -inf if disconnected

  /// Recomputes both caches from scratch.
  void refresh(const EpidemicData& data);
  double log_likelihood(const EpidemicData& data) const;
};

double exposure_integral(std::span<const double> infection, const EpidemicData& data);

/// sum_{j != kappa} log Inf(I_j-); -inf when some non-initial infection
/// happens with nobody infective.
double log_infection_pressure(std::span<const double> infection, const EpidemicData& data);

/// Full log likelihood; -inf when some I_j >= R_j or the epidemic is
/// disconnected. Throws std::invalid_argument on a length mismatch, NaN or
/// non-positive parameters.
double sir_log_likelihood(std::span<const double> infection, const EpidemicData& data, const SirParams& params);

/// E(I') - E(I) when only `changed` indices differ, in O(k m).
double exposure_delta(std::span<const double> before, std::span<const double> after,
                      std::span<const std::size_t> changed, const EpidemicData& data);

/// Deterministic connected start for a given alpha: delta = alpha / 10, so
/// the mean infectious period is c = 10. In removal order, I_1 = R_1 - c and
/// I_j = R_j - c when that lies inside (I_{j-1}, R_{j-1}), otherwise the
/// midpoint of that interval. beta is set to its conditional mean.
SirState initial_sir_state(const EpidemicData& data, double alpha, const SirPriors& priors = {});

/// Infection-time proposal I'_j = R_j - Q_j, Q_j ~ Gamma(alpha, delta), on k
/// indices chosen uniformly without replacement, accepted all-or-nothing.
/// The Gamma terms cancel, so the log ratio is
///   delta log pressure - (beta / N) delta E.
StepRecord update_infection_times_block(SirState& state, const EpidemicData& data, std::size_t k,
                                        BlockSelector& selector, Rng& rng);
StepRecord update_infection_times_block(SirState& state, const EpidemicData& data, std::size_t k, Rng& rng);

/// Same decision rule for a given proposal: accepted iff log_u < log ratio.
StepRecord apply_infection_proposal(SirState& state, const EpidemicData& data,
                                    std::span<const std::size_t> indices, std::span<const double> proposed,
                                    double log_u);

/// beta ~ Gamma(shape + m - 1, rate + E / N).
double gibbs_beta(const SirState& state, const EpidemicData& data, const GammaPrior& prior, Rng& rng);

/// delta ~ Gamma(shape + m alpha, rate + sum (R_j - I_j)).
double gibbs_delta(const SirState& state, const EpidemicData& data, const GammaPrior& prior, Rng& rng);

/// Random walk on log alpha with the Gamma infectious-period terms and the
/// prior, Jacobian included. Updates state.params.alpha in place.
StepRecord update_alpha_rwm(SirState& state, const EpidemicData& data, double scale, const GammaPrior& prior,
                            Rng& rng);

enum class AlphaMode { fixed, unknown };

struct SirRunConfig {
  AlphaMode mode = AlphaMode::fixed;
  double alpha = 1.0;  // fixed value, or the start in unknown mode
  std::size_t k = 1;
  std::uint64_t iterations = 100'000;
  std::uint64_t burn_in = 1'000;
  std::uint64_t seed = 1;
  SirPriors priors;
  double alpha_scale = 0.2;
  std::uint64_t trace_thin = 10;  // 0 disables parameter traces
};

struct SirRunResult {
  TuningRow row;  // infection-time block step, post burn-in
  Trace beta;
  Trace delta;
  Trace alpha;
  double alpha_acceptance = 0.0;
  SirState final_state;
};

/// Cycles gibbs_beta, gibbs_delta, the alpha update (unknown mode) and the
/// infection-time block update.
SirRunResult run_sir_mcmc(const EpidemicData& data, const SirRunConfig& config);

/// One chain per k in the grid, each seeded from (config.seed, grid index).
TuningTable run_sir_sweep(const EpidemicData& data, const SirRunConfig& config, const std::vector<std::size_t>& k_grid,
                          std::size_t threads = 1);

struct SimulatedEpidemic {
  EpidemicData data;
  std::vector<double> infection_times;  // aligned with data.removal_times
};

/// Forward simulation from one infective at time 0. Removal times are kept on
/// the simulation clock.
SimulatedEpidemic simulate_sir(std::size_t population, const SirParams& params, std::uint64_t seed);

/// Repeats simulate_sir on successive streams until the final size lies in
/// [min_size, max_size]. Throws std::runtime_error after max_tries.
SimulatedEpidemic simulate_sir_sized(std::size_t population, const SirParams& params, std::size_t min_size,
                                     std::size_t max_size, std::uint64_t seed, std::size_t max_tries = 10'000);

}  // namespace indscale
