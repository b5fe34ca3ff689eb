#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "indscale/densities.hpp"
#include "indscale/rng.hpp"

namespace indscale {

/// kI at the maximizer of k * 2 Phi(-sqrt(kI / 2)).
inline constexpr double kOptimalScaledBlock = 2.835;
/// Acceptance rate at that maximizer.
inline constexpr double kOptimalAcceptance = 0.234;
/// sup_z 2 z^2 Phi(-z / 2), used to normalize the theoretical efficiency curve.
inline constexpr double kEfficiencyNormalizer = 1.3257;

/// Monte Carlo of E[1 ^ W_k], log W_k = sum_{i<=k} g(Y_i) - g(X_i) with
/// Y_i ~ q, X_i ~ f: the stationary mean acceptance of a k-block move.
/// Needs mc_samples >= 1e4.
Estimate estimate_mean_acceptance(const DensityPair& pair, std::size_t k, std::uint64_t mc_samples,
                                  std::uint64_t seed, std::size_t threads = 1);

/// E[1 ^ exp(V)] for V ~ N(-kI, kJ):
///   Phi(-kI / sqrt(kJ)) + exp(-kI + kJ/2) Phi(-sqrt(kJ) + kI / sqrt(kJ)).
/// The second product is formed in log space, so large kJ cannot overflow.
/// With J = 2I this is 2 Phi(-sqrt(kI / 2)).
double gaussian_acceptance_approx(double k, double discrepancy, double j);

/// round(2.835 / I) with halves rounded down, clamped to [1, n].
/// I = 0 gives n (perfect proposal); I = inf gives 1.
std::size_t optimal_k(double discrepancy, std::size_t n);

/// Normalized theoretical efficiency at a given acceptance rate a:
/// z = -2 Phi^{-1}(a / 2), value 2 z^2 Phi(-z/2) / 1.3257 = z^2 a / 1.3257.
/// Throws std::domain_error unless 0 < a < 1.
double theoretical_efficiency(double acceptance);

/// Block size with predicted CLT acceptance `acceptance` for discrepancy I,
/// i.e. the real k solving 2 Phi(-sqrt(kI / 2)) = acceptance.
double k_for_acceptance(double discrepancy, double acceptance);

struct ScalingOptimum {
  double scaled_block = 0.0;  // kI at the optimum
  double acceptance = 0.0;
  double normalizer = 0.0;  // sup_z 2 z^2 Phi(-z/2)
};

/// Numerically maximizes x * 2 Phi(-sqrt(x / 2)) over x = kI.
ScalingOptimum maximize_gaussian_efficiency();

/// Uniform target U(0,1) with proposal U(0, 1+eps): acceptance (1+eps)^-k,
/// maximized by k = 1 / log(1+eps).
struct UniformOptimum {
  double k_opt = 0.0;
  double acceptance = 0.0;
};
UniformOptimum uniform_case(double eps);

/// H*(y, x1): acceptance probability of moving the tracked component from x1
/// to y when the other k-1 selected components are stationary draws.
/// Exact for k = 1; otherwise Monte Carlo over fresh X ~ f, Y ~ q.
Estimate estimate_H_star(const DensityPair& pair, double y, double x1, std::size_t k,
                         std::uint64_t mc_samples, std::uint64_t seed);

/// Path of the limiting jump process. times[0] = 0 holds the start state;
/// each later entry is a jump.
struct JumpProcessPath {
  std::vector<double> times;
  std::vector<double> states;
  double horizon = 0.0;
  std::uint64_t candidates = 0;

  std::size_t jump_count() const { return times.empty() ? 0 : times.size() - 1; }
  /// Time spent in each state within [0, horizon].
  std::vector<double> holding_times() const;
};

/// Simulates the jump process with generator
///   G h(x) = k * int (h(y) - h(x)) H*(y, x) q(y) dy
/// by thinning: candidates arrive at rate k, y ~ q, and the jump is taken with
/// probability equal to a hstar_samples-draw estimate of H*(y, x). The estimate
/// is unbiased and lies in [0, 1], so the thinning is exact in distribution
/// for any budget; larger budgets only lower the variance of each decision.
JumpProcessPath simulate_limit_process(const DensityPair& pair, std::size_t k, double x0, double horizon,
                                       std::uint64_t hstar_samples, Rng& rng);

/// Spread of H(y, x^n) around H*(y, x1) when the other n - 1 components are
/// redrawn from f. Sanity check for the finite-n approximation only.
struct HFluctuation {
  double h_star = 0.0;
  double mean_h = 0.0;
  double variance = 0.0;
  double mean_abs_deviation = 0.0;
};
HFluctuation h_fluctuation(const DensityPair& pair, std::size_t n, std::size_t k, double y, double x1,
                           std::size_t replicates, std::uint64_t mc_samples, std::uint64_t seed);

struct LimitComparisonOptions {
  std::uint64_t hstar_samples = 1000;
  std::uint64_t acceptance_samples = 200'000;
  std::size_t rate_probes = 100;              // chain states where conditional rates are compared
  std::uint64_t rate_probe_samples = 20'000;  // Monte Carlo draws per probe
  std::size_t threads = 1;
};

struct RateEstimate {
  double rate = 0.0;
  double std_error = 0.0;
};

struct LimitComparison {
  std::size_t n = 0;
  std::size_t k = 0;
  double horizon = 0.0;
  RateEstimate chain;   // component-1 jumps per unit of rescaled time t = iteration / n
  RateEstimate limit;   // thinning simulator
  RateEstimate theory;  // k E[1 ^ W_k]
  double chain_marginal_ks_p = 1.0;  // occupation measure of component 1 vs f
  double limit_marginal_ks_p = 1.0;
  // Mean |k int H(y, x^n) q(y) dy - k int H*(y, x1) q(y) dy| over chain states:
  // how far the finite-n jump intensity of component 1 is from the limit one.
  double conditional_rate_discrepancy = 0.0;
  double conditional_rate_discrepancy_se = 0.0;

  bool chain_matches_limit(double sigmas = 3.0) const;
  bool chain_matches_theory(double sigmas = 3.0) const;
};

/// Runs the full n-component chain from stationarity for horizon * n steps,
/// rescales time by n, and compares component 1 with the limit process.
LimitComparison scaled_chain_vs_limit(const DensityPair& pair, std::size_t n, std::size_t k, double horizon,
                                      std::uint64_t seed, const LimitComparisonOptions& options = {});

}  // namespace indscale
