#include "indscale/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "indscale/sampler.hpp"
#include "indscale/stats.hpp"
#include "monte_carlo.hpp"

namespace indscale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double accept_prob(double log_ratio) { return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio); }

// One draw of sum_{i<m} g(Y_i) - g(X_i) with fresh Y ~ q, X ~ f.
template <class Fam>
double fresh_log_ratio(const Fam& fam, std::size_t m, Rng& rng) {
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += fam.log_weight(fam.sample_proposal(rng)) - fam.log_weight(fam.sample_target(rng));
  return s;
}

template <class Fam>
double hstar_mean(const Fam& fam, double base, std::size_t k, std::uint64_t samples, Rng& rng) {
  double total = 0.0;
  for (std::uint64_t s = 0; s < samples; ++s) total += accept_prob(base + fresh_log_ratio(fam, k - 1, rng));
  return total / static_cast<double>(samples);
}

// Rate estimate from event times on [0, horizon]: counts per unit window,
// SE from batch means over the windows.
RateEstimate rate_from_times(const std::vector<double>& event_times, double horizon) {
  const auto windows = static_cast<std::size_t>(std::floor(horizon));
  if (windows == 0) return {static_cast<double>(event_times.size()) / horizon, 0.0};
  std::vector<double> counts(windows, 0.0);
  for (double t : event_times) {
    const auto w = static_cast<std::size_t>(t);
    if (w < windows) counts[w] += 1.0;
  }
  double sum = 0.0;
  for (double c : counts) sum += c;
  return {sum / static_cast<double>(windows), stats::batch_means_se(counts)};
}

double occupation_ks_p(const DensityPair& pair, const std::vector<double>& states,
                       const std::vector<double>& holding) {
  try {
    return stats::weighted_ks_test(states, holding, [&](double x) { return pair.target_cdf(x); }).p_value;
  } catch (const std::logic_error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

Estimate estimate_mean_acceptance(const DensityPair& pair, std::size_t k, std::uint64_t mc_samples,
                                  std::uint64_t seed, std::size_t threads) {
  if (k < 1) throw std::invalid_argument("estimate_mean_acceptance: k must be >= 1");
  if (mc_samples < 10'000) throw std::invalid_argument("estimate_mean_acceptance: need at least 1e4 samples");
  if (pair.identical()) return {1.0, 0.0};
  return pair.visit([&](const auto& fam) {
    const auto acc = detail::chunked_mean(mc_samples, seed, threads,
                                          [&](Rng& rng) { return accept_prob(fresh_log_ratio(fam, k, rng)); });
    return Estimate{acc.mean(), acc.std_error()};
  });
}

double gaussian_acceptance_approx(double k, double discrepancy, double j) {
  if (!(k >= 1.0) || !(discrepancy > 0.0) || !(j > 0.0))
    throw std::domain_error("gaussian_acceptance_approx: need k >= 1, I > 0, J > 0");
  const double mean = k * discrepancy;
  const double sd = std::sqrt(k * j);
  const double first = stats::normal_cdf(-mean / sd);
  const double log_second = -mean + 0.5 * k * j + stats::log_normal_cdf(-sd + mean / sd);
  return first + std::exp(log_second);
}

std::size_t optimal_k(double discrepancy, std::size_t n) {
  if (n == 0) throw std::invalid_argument("optimal_k: n must be positive");
  if (std::isnan(discrepancy) || discrepancy < 0.0) throw std::domain_error("optimal_k: I must be >= 0");
  if (discrepancy == 0.0) return n;
  if (discrepancy == kInf) return 1;
  const double raw = std::ceil(kOptimalScaledBlock / discrepancy - 0.5);
  if (raw >= static_cast<double>(n)) return n;
  return std::max<std::size_t>(1, static_cast<std::size_t>(raw));
}

double theoretical_efficiency(double acceptance) {
  if (!(acceptance > 0.0 && acceptance < 1.0))
    throw std::domain_error("theoretical_efficiency: acceptance must lie strictly between 0 and 1");
  const double z = -2.0 * stats::normal_quantile(0.5 * acceptance);
  return z * z * acceptance / kEfficiencyNormalizer;
}

double k_for_acceptance(double discrepancy, double acceptance) {
  if (!(discrepancy > 0.0) || !std::isfinite(discrepancy))
    throw std::domain_error("k_for_acceptance: I must be positive and finite");
  if (!(acceptance > 0.0 && acceptance < 1.0))
    throw std::domain_error("k_for_acceptance: acceptance must lie strictly between 0 and 1");
  const double q = stats::normal_quantile(0.5 * acceptance);
  return 2.0 * q * q / discrepancy;
}

ScalingOptimum maximize_gaussian_efficiency() {
  const auto negative = [](double x) { return -x * 2.0 * stats::normal_cdf(-std::sqrt(0.5 * x)); };
  const auto [x, fx] = boost::math::tools::brent_find_minima(negative, 1e-3, 50.0, 52);
  const double acceptance = 2.0 * stats::normal_cdf(-std::sqrt(0.5 * x));
  return {x, acceptance, -2.0 * fx};
}

UniformOptimum uniform_case(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::domain_error("uniform_case: eps must be positive");
  const double rate = std::log1p(eps);
  const double k = 1.0 / rate;
  return {k, std::exp(-k * rate)};
}

Estimate estimate_H_star(const DensityPair& pair, double y, double x1, std::size_t k, std::uint64_t mc_samples,
                         std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("estimate_H_star: k must be >= 1");
  const double gx = pair.log_weight(x1);
  if (gx == -kInf) throw std::domain_error("estimate_H_star: omega(x1) = 0");
  const double base = pair.log_weight(y) - gx;
  if (k == 1 || pair.identical()) return {accept_prob(base), 0.0};
  if (mc_samples < 2) throw std::invalid_argument("estimate_H_star: need at least 2 samples");
  return pair.visit([&](const auto& fam) {
    const auto acc = detail::chunked_mean(mc_samples, seed, 1,
                                          [&](Rng& rng) { return accept_prob(base + fresh_log_ratio(fam, k - 1, rng)); });
    return Estimate{acc.mean(), acc.std_error()};
  });
}

std::vector<double> JumpProcessPath::holding_times() const {
  std::vector<double> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    out[i] = (i + 1 < times.size() ? times[i + 1] : horizon) - times[i];
  return out;
}

JumpProcessPath simulate_limit_process(const DensityPair& pair, std::size_t k, double x0, double horizon,
                                       std::uint64_t hstar_samples, Rng& rng) {
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate_limit_process: horizon must be positive");
  if (k < 1) throw std::invalid_argument("simulate_limit_process: k must be >= 1");
  if (k > 1 && hstar_samples < 1) throw std::invalid_argument("simulate_limit_process: hstar_samples must be >= 1");
  double gx = pair.log_weight(x0);
  if (gx == -kInf) throw std::domain_error("simulate_limit_process: start outside the target support");

  JumpProcessPath path;
  path.horizon = horizon;
  path.times.push_back(0.0);
  path.states.push_back(x0);
  const bool exact = k == 1 || pair.identical();
  const double rate = static_cast<double>(k);
  pair.visit([&](const auto& fam) {
    double t = 0.0;
    for (;;) {
      t -= std::log(uniform01(rng)) / rate;
      if (t > horizon) break;
      ++path.candidates;
      const double y = fam.sample_proposal(rng);
      const double gy = fam.log_weight(y);
      const double base = gy - gx;
      const double p = exact ? accept_prob(base) : hstar_mean(fam, base, k, hstar_samples, rng);
      if (uniform01(rng) < p) {
        path.times.push_back(t);
        path.states.push_back(y);
        gx = gy;
      }
    }
  });
  return path;
}

namespace {

// Monte Carlo of int (H(y, x^n) - H*(y, x1)) q(y) dy on common random numbers:
// the same y and proposals Y, with the k-1 partners either drawn from the
// other components (population) or fresh from f.
template <class Fam>
stats::MeanAccumulator rate_gap(const Fam& fam, double gx, std::span<const double> others, std::size_t k,
                                std::uint64_t samples, BlockSelector& selector, Rng& rng) {
  stats::MeanAccumulator acc;
  for (std::uint64_t s = 0; s < samples; ++s) {
    double common = fam.log_weight(fam.sample_proposal(rng)) - gx;
    for (std::size_t i = 1; i < k; ++i) common += fam.log_weight(fam.sample_proposal(rng));
    double from_pop = common;
    for (std::size_t idx : selector.select(k - 1, rng)) from_pop -= others[idx];
    double fresh = common;
    for (std::size_t i = 1; i < k; ++i) fresh -= fam.log_weight(fam.sample_target(rng));
    acc.add(accept_prob(from_pop) - accept_prob(fresh));
  }
  return acc;
}

}  // namespace

HFluctuation h_fluctuation(const DensityPair& pair, std::size_t n, std::size_t k, double y, double x1,
                           std::size_t replicates, std::uint64_t mc_samples, std::uint64_t seed) {
  if (k < 2 || k > n) throw std::invalid_argument("h_fluctuation: need 2 <= k <= n");
  if (replicates < 2) throw std::invalid_argument("h_fluctuation: need at least 2 replicates");
  const double gx = pair.log_weight(x1);
  const double base = pair.log_weight(y) - gx;
  HFluctuation out;
  out.h_star = estimate_H_star(pair, y, x1, k, mc_samples, seed).value;
  stats::MeanAccumulator h_acc;
  double abs_dev = 0.0;
  pair.visit([&](const auto& fam) {
    BlockSelector selector(n - 1);
    std::vector<double> others(n - 1);
    for (std::size_t r = 0; r < replicates; ++r) {
      Rng rng = make_stream(seed, 2000 + r);
      for (auto& g : others) g = fam.log_weight(fam.sample_target(rng));
      double total = 0.0;
      for (std::uint64_t s = 0; s < mc_samples; ++s) {
        double lr = base;
        for (std::size_t i = 1; i < k; ++i) lr += fam.log_weight(fam.sample_proposal(rng));
        for (std::size_t idx : selector.select(k - 1, rng)) lr -= others[idx];
        total += accept_prob(lr);
      }
      const double h = total / static_cast<double>(mc_samples);
      h_acc.add(h);
      abs_dev += std::abs(h - out.h_star);
    }
  });
  out.mean_h = h_acc.mean();
  out.variance = h_acc.variance();
  out.mean_abs_deviation = abs_dev / static_cast<double>(replicates);
  return out;
}

bool LimitComparison::chain_matches_limit(double sigmas) const {
  return std::abs(chain.rate - limit.rate) <= sigmas * std::hypot(chain.std_error, limit.std_error);
}

bool LimitComparison::chain_matches_theory(double sigmas) const {
  return std::abs(chain.rate - theory.rate) <= sigmas * std::hypot(chain.std_error, theory.std_error);
}

LimitComparison scaled_chain_vs_limit(const DensityPair& pair, std::size_t n, std::size_t k, double horizon,
                                      std::uint64_t seed, const LimitComparisonOptions& options) {
  if (k < 1 || k > n) throw std::out_of_range("scaled_chain_vs_limit: k must lie in [1, n]");
  if (!(horizon >= 1.0)) throw std::invalid_argument("scaled_chain_vs_limit: horizon must be >= 1");
  LimitComparison out;
  out.n = n;
  out.k = k;
  out.horizon = horizon;

  const auto steps = static_cast<std::uint64_t>(std::llround(horizon * static_cast<double>(n)));
  const double dn = static_cast<double>(n);
  const std::size_t probes = k > 1 ? options.rate_probes : 0;
  const std::uint64_t probe_every = probes > 0 ? std::max<std::uint64_t>(1, steps / (probes + 1)) : 0;

  // Full chain, component 0 plays the tracked first component.
  Rng rng = make_stream(seed, 0);
  ChainState state = ChainState::stationary(pair, n, rng);
  BlockIndependenceSampler sampler(pair, n);
  std::vector<double> jump_times;
  std::vector<double> visited{state.x[0]};
  std::vector<double> entered{0.0};
  stats::MeanAccumulator gaps;
  BlockSelector probe_selector(n > 1 ? n - 1 : 1);
  std::size_t probes_done = 0;

  for (std::uint64_t t = 0; t < steps; ++t) {
    if (probes_done < probes && t == probe_every * (probes_done + 1)) {
      Rng probe_rng = make_stream(seed, 5000 + probes_done);
      const std::span<const double> others(state.cached_log_weight.data() + 1, n - 1);
      const double gx = state.cached_log_weight[0];
      const auto gap = pair.visit([&](const auto& fam) {
        return rate_gap(fam, gx, others, k, options.rate_probe_samples, probe_selector, probe_rng);
      });
      gaps.add(static_cast<double>(k) * std::abs(gap.mean()));
      ++probes_done;
    }
    const StepRecord rec = sampler.step(state, k, rng);
    if (!rec.accepted) continue;
    const auto idx = sampler.last_indices();
    if (std::find(idx.begin(), idx.end(), std::size_t{0}) != idx.end()) {
      const double time = static_cast<double>(t + 1) / dn;
      jump_times.push_back(time);
      visited.push_back(state.x[0]);
      entered.push_back(time);
    }
  }
  out.chain = rate_from_times(jump_times, horizon);
  out.conditional_rate_discrepancy = gaps.mean();
  out.conditional_rate_discrepancy_se = gaps.std_error();
  std::vector<double> chain_hold(visited.size());
  for (std::size_t i = 0; i < visited.size(); ++i)
    chain_hold[i] = (i + 1 < entered.size() ? entered[i + 1] : horizon) - entered[i];
  out.chain_marginal_ks_p = occupation_ks_p(pair, visited, chain_hold);

  Rng limit_rng = make_stream(seed, 1);
  const double x0 = pair.sample_target(limit_rng);
  const JumpProcessPath path = simulate_limit_process(pair, k, x0, horizon, options.hstar_samples, limit_rng);
  std::vector<double> limit_jumps(path.times.begin() + 1, path.times.end());
  out.limit = rate_from_times(limit_jumps, horizon);
  out.limit_marginal_ks_p = occupation_ks_p(pair, path.states, path.holding_times());

  const Estimate acc = estimate_mean_acceptance(pair, k, options.acceptance_samples, seed + 1, options.threads);
  out.theory = {static_cast<double>(k) * acc.value, static_cast<double>(k) * acc.std_error};
  return out;
}

}  // namespace indscale
