#include "indscale/sir.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

#include "indscale/parallel.hpp"
#include "indscale/stats.hpp"

namespace indscale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sum_periods(const SirState& state, const EpidemicData& data) {
  double total = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) total += data.removal_times[j] - state.infection_times[j];
  return total;
}

double log_periods_density(const SirState& state, const EpidemicData& data, double alpha) {
  double total = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j)
    total += stats::log_gamma_pdf(data.removal_times[j] - state.infection_times[j], alpha, state.params.delta);
  return total;
}

double pair_term(const EpidemicData& data, std::span<const double> infection, std::size_t i, std::size_t j) {
  return std::min(data.removal_times[i], infection[j]) - std::min(infection[i], infection[j]);
}

}  // namespace

EpidemicData EpidemicData::from_times(std::vector<double> times, std::size_t population) {
  EpidemicData data;
  data.population = population;
  data.original_index.resize(times.size());
  std::iota(data.original_index.begin(), data.original_index.end(), std::size_t{0});
  std::stable_sort(data.original_index.begin(), data.original_index.end(),
                   [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  data.removal_times.reserve(times.size());
  for (std::size_t i : data.original_index) data.removal_times.push_back(times[i]);
  data.validate();
  return data;
}

void EpidemicData::validate() const {
  if (population < removal_times.size())
    throw std::invalid_argument("epidemic data: population N = " + std::to_string(population) +
                                " is smaller than the number of removals " + std::to_string(removal_times.size()));
  for (std::size_t i = 0; i < removal_times.size(); ++i) {
    if (!std::isfinite(removal_times[i]) || removal_times[i] < 0.0)
      throw std::invalid_argument("epidemic data: removal time " + std::to_string(i) + " is negative or not finite");
    if (i > 0 && removal_times[i] < removal_times[i - 1])
      throw std::invalid_argument("epidemic data: removal times must be sorted");
  }
}

double exposure_integral(std::span<const double> infection, const EpidemicData& data) {
  const std::size_t m = data.size();
  double pairs = 0.0;
  double periods = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    periods += data.removal_times[i] - infection[i];
    for (std::size_t j = 0; j < m; ++j) pairs += pair_term(data, infection, i, j);
  }
  return pairs + static_cast<double>(data.population - m) * periods;
}

double log_infection_pressure(std::span<const double> infection, const EpidemicData& data) {
  const std::size_t m = data.size();
  std::vector<double> sorted(infection.begin(), infection.end());
  std::sort(sorted.begin(), sorted.end());
  const auto& r = data.removal_times;
  double total = 0.0;
  std::size_t initial = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double t = infection[j];
    if (!(t < r[j])) return -kInf;
    const auto infected_before = std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    if (infected_before == 0) {
      if (++initial > 1) return -kInf;
      continue;
    }
    const auto removed_before = std::lower_bound(r.begin(), r.end(), t) - r.begin();
    const auto infectives = infected_before - removed_before;
    if (infectives <= 0) return -kInf;
    total += std::log(static_cast<double>(infectives));
  }
  return total;
}

double sir_log_likelihood(std::span<const double> infection, const EpidemicData& data, const SirParams& params) {
  const std::size_t m = data.size();
  if (infection.size() != m) throw std::invalid_argument("sir_log_likelihood: need one infection time per removal");
  if (!(params.beta > 0.0 && params.alpha > 0.0 && params.delta > 0.0))
    throw std::invalid_argument("sir_log_likelihood: parameters must be positive");
  for (double t : infection)
    if (std::isnan(t)) throw std::invalid_argument("sir_log_likelihood: NaN infection time");
  const double pressure = log_infection_pressure(infection, data);
  if (pressure == -kInf) return -kInf;
  const double n = static_cast<double>(data.population);
  double ll = (static_cast<double>(m) - 1.0) * std::log(params.beta / n) + pressure -
              params.beta / n * exposure_integral(infection, data);
  for (std::size_t j = 0; j < m; ++j)
    ll += stats::log_gamma_pdf(data.removal_times[j] - infection[j], params.alpha, params.delta);
  return ll;
}

double exposure_delta(std::span<const double> before, std::span<const double> after,
                      std::span<const std::size_t> changed, const EpidemicData& data) {
  const std::size_t m = data.size();
  std::vector<char> in_block(m, 0);
  for (std::size_t i : changed) in_block[i] = 1;
  double delta = 0.0;
  for (std::size_t i : changed) {
    for (std::size_t j = 0; j < m; ++j) delta += pair_term(data, after, i, j) - pair_term(data, before, i, j);
    delta += static_cast<double>(data.population - m) * (before[i] - after[i]);
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (in_block[i]) continue;
    for (std::size_t j : changed) delta += pair_term(data, after, i, j) - pair_term(data, before, i, j);
  }
  return delta;
}

void SirState::refresh(const EpidemicData& data) {
  exposure = exposure_integral(infection_times, data);
  log_infection_pressure = indscale::log_infection_pressure(infection_times, data);
}

double SirState::log_likelihood(const EpidemicData& data) const {
  return sir_log_likelihood(infection_times, data, params);
}

SirState initial_sir_state(const EpidemicData& data, double alpha, const SirPriors& priors) {
  data.validate();
  if (data.size() == 0) throw std::invalid_argument("initial_sir_state: no removals");
  if (!(alpha > 0.0)) throw std::invalid_argument("initial_sir_state: alpha must be positive");
  constexpr double kPeriod = 10.0;
  const auto& r = data.removal_times;
  SirState state;
  state.params.alpha = alpha;
  state.params.delta = alpha / kPeriod;
  auto& inf = state.infection_times;
  inf.resize(r.size());
  inf[0] = r[0] - kPeriod;
  for (std::size_t j = 1; j < r.size(); ++j) {
    const double candidate = r[j] - kPeriod;
    inf[j] = (candidate > inf[j - 1] && candidate < r[j - 1]) ? candidate : 0.5 * (inf[j - 1] + r[j - 1]);
  }
  state.refresh(data);
  const double m = static_cast<double>(r.size());
  state.params.beta =
      (priors.beta.shape + m - 1.0) / (priors.beta.rate + state.exposure / static_cast<double>(data.population));
  return state;
}

StepRecord apply_infection_proposal(SirState& state, const EpidemicData& data,
                                    std::span<const std::size_t> indices, std::span<const double> proposed,
                                    double log_u) {
  if (indices.size() != proposed.size())
    throw std::invalid_argument("apply_infection_proposal: indices and proposal differ in length");
  if (state.log_infection_pressure == -kInf)
    throw std::logic_error("apply_infection_proposal: current state has zero likelihood");
  std::vector<double> after(state.infection_times);
  for (std::size_t j = 0; j < indices.size(); ++j) after.at(indices[j]) = proposed[j];
  StepRecord record{false, indices.size(), -kInf};
  const double pressure = log_infection_pressure(after, data);
  double d_exposure = 0.0;
  if (pressure != -kInf) {
    d_exposure = exposure_delta(state.infection_times, after, indices, data);
    record.log_ratio = pressure - state.log_infection_pressure -
                       state.params.beta / static_cast<double>(data.population) * d_exposure;
  }
  if (log_u < record.log_ratio) {
    state.infection_times = std::move(after);
    state.log_infection_pressure = pressure;
    state.exposure += d_exposure;
    record.accepted = true;
  }
  return record;
}

StepRecord update_infection_times_block(SirState& state, const EpidemicData& data, std::size_t k,
                                        BlockSelector& selector, Rng& rng) {
  if (k < 1 || k > data.size())
    throw std::out_of_range("infection-time block: k = " + std::to_string(k) + " outside [1, m]");
  const auto indices = selector.select(k, rng);
  std::vector<double> proposed(k);
  for (std::size_t j = 0; j < k; ++j)
    proposed[j] = data.removal_times[indices[j]] - gamma_rate(rng, state.params.alpha, state.params.delta);
  return apply_infection_proposal(state, data, indices, proposed, std::log(uniform01(rng)));
}

StepRecord update_infection_times_block(SirState& state, const EpidemicData& data, std::size_t k, Rng& rng) {
  BlockSelector selector(data.size());
  return update_infection_times_block(state, data, k, selector, rng);
}

double gibbs_beta(const SirState& state, const EpidemicData& data, const GammaPrior& prior, Rng& rng) {
  const std::size_t m = data.size();
  if (m == 0) return gamma_rate(rng, prior.shape, prior.rate);
  if (m >= 2 && !(state.exposure > 0.0)) throw std::logic_error("gibbs_beta: exposure must be positive");
  return gamma_rate(rng, prior.shape + static_cast<double>(m) - 1.0,
                    prior.rate + state.exposure / static_cast<double>(data.population));
}

double gibbs_delta(const SirState& state, const EpidemicData& data, const GammaPrior& prior, Rng& rng) {
  const double m = static_cast<double>(data.size());
  return gamma_rate(rng, prior.shape + m * state.params.alpha, prior.rate + sum_periods(state, data));
}

StepRecord update_alpha_rwm(SirState& state, const EpidemicData& data, double scale, const GammaPrior& prior,
                            Rng& rng) {
  const double alpha = state.params.alpha;
  const double proposal = alpha * std::exp(scale * std_normal(rng));
  const auto log_target = [&](double a) {
    return log_periods_density(state, data, a) + stats::log_gamma_pdf(a, prior.shape, prior.rate) + std::log(a);
  };
  StepRecord record{false, 1, log_target(proposal) - log_target(alpha)};
  if (std::isnan(record.log_ratio)) record.log_ratio = -kInf;
  if (std::log(uniform01(rng)) < record.log_ratio) {
    state.params.alpha = proposal;
    record.accepted = true;
  }
  return record;
}

SirRunResult run_sir_mcmc(const EpidemicData& data, const SirRunConfig& config) {
  data.validate();
  const std::size_t m = data.size();
  if (m == 0) throw std::invalid_argument("run_sir_mcmc: no removals");
  if (config.k < 1 || config.k > m) throw std::out_of_range("run_sir_mcmc: k must lie in [1, m]");
  if (config.iterations <= config.burn_in) throw std::invalid_argument("run_sir_mcmc: iterations must exceed burn_in");
  if (!(config.alpha > 0.0)) throw std::invalid_argument("run_sir_mcmc: alpha must be positive");

  Rng rng = make_stream(config.seed, 0);
  SirRunResult result;
  SirState state = initial_sir_state(data, config.alpha, config.priors);
  BlockSelector selector(m);
  result.beta.label = "beta";
  result.delta.label = "delta";
  result.alpha.label = "alpha";

  constexpr std::uint64_t kBatches = 50;
  const std::uint64_t recorded = config.iterations - config.burn_in;
  const std::uint64_t batch_len = std::max<std::uint64_t>(1, recorded / kBatches);
  stats::MeanAccumulator batches;
  std::uint64_t in_batch = 0, batch_accepts = 0, accepted = 0, alpha_accepted = 0;

  for (std::uint64_t t = 0; t < config.iterations; ++t) {
    state.params.beta = gibbs_beta(state, data, config.priors.beta, rng);
    state.params.delta = gibbs_delta(state, data, config.priors.delta, rng);
    bool alpha_moved = false;
    if (config.mode == AlphaMode::unknown)
      alpha_moved = update_alpha_rwm(state, data, config.alpha_scale, config.priors.alpha, rng).accepted;
    const StepRecord rec = update_infection_times_block(state, data, config.k, selector, rng);
    if (t < config.burn_in) continue;
    accepted += rec.accepted;
    alpha_accepted += alpha_moved;
    batch_accepts += rec.accepted;
    if (++in_batch == batch_len) {
      batches.add(static_cast<double>(batch_accepts) / static_cast<double>(batch_len));
      in_batch = batch_accepts = 0;
    }
    if (config.trace_thin > 0 && (t - config.burn_in) % config.trace_thin == 0) {
      result.beta.values.push_back(state.params.beta);
      result.delta.values.push_back(state.params.delta);
      result.alpha.values.push_back(state.params.alpha);
    }
  }
  result.row.k = config.k;
  result.row.acceptance = static_cast<double>(accepted) / static_cast<double>(recorded);
  result.row.mean_moved = static_cast<double>(config.k) * result.row.acceptance;
  result.row.mc_se = batches.std_error();
  result.alpha_acceptance = static_cast<double>(alpha_accepted) / static_cast<double>(recorded);
  result.final_state = std::move(state);
  return result;
}

TuningTable run_sir_sweep(const EpidemicData& data, const SirRunConfig& config, const std::vector<std::size_t>& k_grid,
                          std::size_t threads) {
  if (k_grid.empty()) throw std::invalid_argument("run_sir_sweep: empty k grid");
  std::vector<TuningRow> rows(k_grid.size());
  parallel_for(k_grid.size(), threads, [&](std::size_t g) {
    SirRunConfig run = config;
    run.k = k_grid[g];
    run.seed = derive_seed(config.seed, g);
    run.trace_thin = 0;
    rows[g] = run_sir_mcmc(data, run).row;
  });
  return tuning_summary(std::move(rows), config.mode == AlphaMode::fixed ? "sir alpha fixed" : "sir alpha unknown");
}

SimulatedEpidemic simulate_sir(std::size_t population, const SirParams& params, std::uint64_t seed) {
  if (population < 1) throw std::invalid_argument("simulate_sir: population must be >= 1");
  if (!(params.beta > 0.0 && params.alpha > 0.0 && params.delta > 0.0))
    throw std::invalid_argument("simulate_sir: parameters must be positive");
  Rng rng = make_stream(seed, 0);
  std::vector<double> infection{0.0};
  std::vector<double> removal{gamma_rate(rng, params.alpha, params.delta)};
  std::priority_queue<double, std::vector<double>, std::greater<>> pending;
  pending.push(removal[0]);
  std::size_t susceptible = population - 1;
  double t = 0.0;
  const double n = static_cast<double>(population);
  while (!pending.empty()) {
    double next_infection = kInf;
    if (susceptible > 0) {
      const double rate = params.beta * static_cast<double>(susceptible) * static_cast<double>(pending.size()) / n;
      next_infection = t - std::log(uniform01(rng)) / rate;
    }
    if (next_infection < pending.top()) {
      t = next_infection;
      --susceptible;
      infection.push_back(t);
      removal.push_back(t + gamma_rate(rng, params.alpha, params.delta));
      pending.push(removal.back());
    } else {
      t = pending.top();
      pending.pop();
    }
  }
  SimulatedEpidemic out;
  out.data = EpidemicData::from_times(removal, population);
  for (std::size_t i : out.data.original_index) out.infection_times.push_back(infection[i]);
  return out;
}

SimulatedEpidemic simulate_sir_sized(std::size_t population, const SirParams& params, std::size_t min_size,
                                     std::size_t max_size, std::uint64_t seed, std::size_t max_tries) {
  for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
    SimulatedEpidemic sim = simulate_sir(population, params, derive_seed(seed, attempt));
    if (sim.data.size() >= min_size && sim.data.size() <= max_size) return sim;
  }
  throw std::runtime_error("simulate_sir_sized: no outbreak of the requested size after " +
                           std::to_string(max_tries) + " attempts");
}

}  // namespace indscale
