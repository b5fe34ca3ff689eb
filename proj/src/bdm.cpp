#include "indscale/bdm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "indscale/parallel.hpp"
#include "indscale/stats.hpp"

namespace indscale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fenwick tree over non-negative integer weights with prefix search.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0), top_(n == 0 ? 0 : std::bit_floor(n)) {}

  void add(std::size_t i, std::int64_t delta) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
  }

  // Smallest index whose prefix sum reaches `target` (1-based rank).
  std::size_t find(std::int64_t target) const {
    std::size_t pos = 0;
    for (std::size_t step = top_; step > 0; step >>= 1) {
      if (pos + step < tree_.size() && tree_[pos + step] < target) {
        pos += step;
        target -= tree_[pos];
      }
    }
    return pos;
  }

 private:
  std::vector<std::int64_t> tree_;
  std::size_t top_;
};

std::size_t rank_from_uniform(double x, std::size_t total) {
  const auto idx = static_cast<std::size_t>(std::ceil(x * static_cast<double>(total)));
  return std::clamp<std::size_t>(idx, 1, total);
}

double log_mean_exp(std::span<const double> values) {
  double hi = -kInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == -kInf) return -kInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum / static_cast<double>(values.size()));
}

}  // namespace

ClusterData ClusterData::from_clusters(std::vector<Cluster> clusters) {
  ClusterData data;
  data.clusters = std::move(clusters);
  std::sort(data.clusters.begin(), data.clusters.end(),
            [](const Cluster& x, const Cluster& y) { return x.size < y.size; });
  data.validate();
  return data;
}

ClusterData ClusterData::from_sizes(std::span<const std::size_t> sizes) {
  std::map<std::size_t, std::size_t> tally;
  for (std::size_t s : sizes) ++tally[s];
  std::vector<Cluster> clusters;
  for (const auto& [size, count] : tally) clusters.push_back({size, count});
  return from_clusters(std::move(clusters));
}

std::size_t ClusterData::sample_size() const {
  std::size_t total = 0;
  for (const auto& c : clusters) total += c.size * c.count;
  return total;
}

std::size_t ClusterData::cluster_count() const {
  std::size_t total = 0;
  for (const auto& c : clusters) total += c.count;
  return total;
}

void ClusterData::validate() const {
  if (clusters.empty()) throw std::invalid_argument("cluster data: no clusters");
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i].size == 0) throw std::invalid_argument("cluster data: cluster size must be positive");
    if (clusters[i].count == 0) throw std::invalid_argument("cluster data: cluster count must be positive");
    if (i > 0 && clusters[i].size <= clusters[i - 1].size)
      throw std::invalid_argument("cluster data: sizes must be distinct (size " +
                                  std::to_string(clusters[i].size) + " repeated)");
  }
}

BdmPopulation simulate_bdm(const BdmParams& params, std::span<const double> u, std::span<const double> w,
                           std::size_t target_size) {
  if (!params.valid()) throw std::invalid_argument("simulate_bdm: need a, d > 0 and a + d < 1");
  if (target_size < 1) throw std::invalid_argument("simulate_bdm: target size must be >= 1");
  if (u.size() != w.size()) throw std::invalid_argument("simulate_bdm: u and w differ in length");

  BdmPopulation pop;
  std::vector<std::size_t> counts{1};
  Fenwick tree(u.size() + 1);
  tree.add(0, 1);
  pop.total = 1;
  const double birth = params.a;
  const double death = params.a + params.d;
  bool stopped = pop.total == target_size;
  for (std::size_t i = 0; i < u.size() && !stopped; ++i) {
    const std::size_t type = tree.find(static_cast<std::int64_t>(rank_from_uniform(w[i], pop.total)));
    if (u[i] < birth) {
      ++counts[type];
      tree.add(type, 1);
      ++pop.total;
      ++pop.births;
    } else if (u[i] < death) {
      --counts[type];
      tree.add(type, -1);
      --pop.total;
      ++pop.deaths;
    } else {
      --counts[type];
      tree.add(type, -1);
      tree.add(counts.size(), 1);
      counts.push_back(1);
      ++pop.mutations;
    }
    pop.events_used = i + 1;
    if (pop.total == 0) {
      pop.status = BdmStatus::extinct;
      stopped = true;
    } else if (pop.total == target_size) {
      stopped = true;
    }
  }
  if (!stopped) pop.status = BdmStatus::latent_exhausted;
  for (std::size_t c : counts)
    if (c > 0) pop.type_counts.push_back(c);
  return pop;
}

std::size_t obs_v_length(const ClusterData& data, std::size_t n_rep) { return n_rep * data.cluster_count(); }

ObsEstimate estimate_obs_loglik(const BdmPopulation& pop, const ClusterData& data, std::span<const double> v,
                                std::size_t n_rep) {
  if (n_rep < 1) throw std::invalid_argument("estimate_obs_loglik: n_rep must be >= 1");
  const std::size_t per_rep = data.cluster_count();
  if (v.size() < n_rep * per_rep)
    throw std::invalid_argument("estimate_obs_loglik: v holds " + std::to_string(v.size()) + " values, need " +
                                std::to_string(n_rep * per_rep));
  if (pop.status != BdmStatus::success) return {-kInf, false};
  const std::size_t sample = data.sample_size();
  if (pop.total < sample) return {-kInf, true};

  const auto& counts = pop.type_counts;
  const std::size_t types = counts.size();
  if (types < per_rep) return {-kInf, false};

  // C(N_t, s) for every cluster size s >= 2, over the types large enough.
  struct SizeTable {
    std::vector<std::size_t> candidates;
    std::vector<double> weight;
  };
  std::vector<SizeTable> tables(data.clusters.size());
  double log_norm = stats::log_choose(static_cast<double>(pop.total), static_cast<double>(sample));
  for (std::size_t c = 0; c < data.clusters.size(); ++c) {
    const auto& cl = data.clusters[c];
    log_norm += std::lgamma(static_cast<double>(cl.count) + 1.0);
    if (cl.size < 2) continue;
    for (std::size_t t = 0; t < types; ++t) {
      if (counts[t] < cl.size) continue;
      tables[c].candidates.push_back(t);
      tables[c].weight.push_back(
          std::exp(stats::log_choose(static_cast<double>(counts[t]), static_cast<double>(cl.size))));
    }
    if (tables[c].candidates.size() < cl.count) return {-kInf, false};
  }

  std::vector<double> rep_log(n_rep);
  std::vector<char> used(types);
  for (std::size_t r = 0; r < n_rep; ++r) {
    std::fill(used.begin(), used.end(), 0);
    const double* draws = v.data() + r * per_rep;
    double log_w = 0.0;
    bool dead = false;
    for (std::size_t c = data.clusters.size(); c-- > 0 && !dead;) {
      const auto& cl = data.clusters[c];
      if (cl.size >= 2) {
        const auto& tab = tables[c];
        for (std::size_t j = 0; j < cl.count; ++j) {
          double total = 0.0;
          for (std::size_t i = 0; i < tab.candidates.size(); ++i)
            if (!used[tab.candidates[i]]) total += tab.weight[i];
          if (!(total > 0.0)) {
            dead = true;
            break;
          }
          const double target = *draws++ * total;
          double cum = 0.0;
          std::size_t pick = tab.candidates.size();
          for (std::size_t i = 0; i < tab.candidates.size(); ++i) {
            if (used[tab.candidates[i]]) continue;
            cum += tab.weight[i];
            pick = i;
            if (cum >= target) break;
          }
          used[tab.candidates[pick]] = 1;
          log_w += std::log(total);
        }
      } else {
        Fenwick tree(types);
        std::int64_t total = 0;
        for (std::size_t t = 0; t < types; ++t) {
          if (used[t]) continue;
          tree.add(t, static_cast<std::int64_t>(counts[t]));
          total += static_cast<std::int64_t>(counts[t]);
        }
        for (std::size_t j = 0; j < cl.count; ++j) {
          if (total <= 0) {
            dead = true;
            break;
          }
          const std::size_t t = tree.find(static_cast<std::int64_t>(rank_from_uniform(*draws++, static_cast<std::size_t>(total))));
          log_w += std::log(static_cast<double>(total));
          tree.add(t, -static_cast<std::int64_t>(counts[t]));
          total -= static_cast<std::int64_t>(counts[t]);
        }
      }
    }
    rep_log[r] = dead ? -kInf : log_w;
  }
  const double value = log_mean_exp(rep_log);
  return {value == -kInf ? -kInf : value - log_norm, false};
}

double bdm_loglik(const BdmModel& model, const BdmParams& params, std::span<const double> u,
                  std::span<const double> w, std::span<const double> v, BdmPopulation* pop) {
  BdmPopulation sim = simulate_bdm(params, u, w, model.target_size);
  const double ll = estimate_obs_loglik(sim, model.data, v, model.n_rep).log_value;
  if (pop) *pop = std::move(sim);
  return ll;
}

BdmLatentState initial_bdm_state(const BdmModel& model, const BdmParams& params, std::size_t n_latent, Rng& rng,
                                 std::size_t max_attempts) {
  if (!params.valid()) throw std::invalid_argument("initial_bdm_state: invalid (a, d)");
  if (n_latent < 1) throw std::invalid_argument("initial_bdm_state: n_latent must be >= 1");
  BdmLatentState state;
  state.params = params;
  state.u.resize(n_latent);
  state.w.resize(n_latent);
  state.v.resize(obs_v_length(model.data, model.n_rep));
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    for (auto& x : state.u) x = uniform01(rng);
    for (auto& x : state.w) x = uniform01(rng);
    for (auto& x : state.v) x = uniform01(rng);
    state.loglik = bdm_loglik(model, params, state.u, state.w, state.v, &state.population);
    if (state.loglik > -kInf) return state;
  }
  throw std::runtime_error("initial_bdm_state: no latent draw reproduced the data in " +
                           std::to_string(max_attempts) + " attempts");
}

StepRecord update_latents_block(BdmLatentState& state, const BdmModel& model, std::size_t k,
                                BlockSelector& selector, Rng& rng) {
  const std::size_t n = state.u.size();
  if (k < 1 || k > n) throw std::out_of_range("latent block: k = " + std::to_string(k) + " outside [1, n]");
  const auto su = selector.select(k, rng);
  std::vector<std::size_t> iu(su.begin(), su.end());
  const auto sw = selector.select(k, rng);
  std::vector<std::size_t> iw(sw.begin(), sw.end());

  std::vector<double> old_u(k), old_w(k);
  bool touches_used = false;
  for (std::size_t j = 0; j < k; ++j) {
    old_u[j] = state.u[iu[j]];
    old_w[j] = state.w[iw[j]];
    state.u[iu[j]] = uniform01(rng);
    state.w[iw[j]] = uniform01(rng);
    touches_used = touches_used || iu[j] < state.population.events_used || iw[j] < state.population.events_used;
  }
  const double log_u = std::log(uniform01(rng));
  StepRecord record{false, k, 0.0};
  if (!touches_used) {
    // The simulation stops before reading any changed entry.
    record.accepted = true;
    return record;
  }
  BdmPopulation pop;
  const double ll = bdm_loglik(model, state.params, state.u, state.w, state.v, &pop);
  record.log_ratio = ll - state.loglik;
  if (ll > -kInf && log_u < record.log_ratio) {
    state.population = std::move(pop);
    state.loglik = ll;
    record.accepted = true;
  } else {
    for (std::size_t j = 0; j < k; ++j) {
      state.u[iu[j]] = old_u[j];
      state.w[iw[j]] = old_w[j];
    }
  }
  return record;
}

StepRecord update_latents_block(BdmLatentState& state, const BdmModel& model, std::size_t k, Rng& rng) {
  BlockSelector selector(state.u.size());
  return update_latents_block(state, model, k, selector, rng);
}

StepRecord update_v_block(BdmLatentState& state, const BdmModel& model, std::size_t k_v, BlockSelector& selector,
                          Rng& rng) {
  if (k_v == 0) return {true, 0, 0.0};
  if (k_v > state.v.size()) throw std::out_of_range("v block: k_v exceeds the length of v");
  const auto idx = selector.select(k_v, rng);
  std::vector<double> old(k_v);
  for (std::size_t j = 0; j < k_v; ++j) {
    old[j] = state.v[idx[j]];
    state.v[idx[j]] = uniform01(rng);
  }
  const double ll = estimate_obs_loglik(state.population, model.data, state.v, model.n_rep).log_value;
  StepRecord record{false, k_v, ll - state.loglik};
  if (ll > -kInf && std::log(uniform01(rng)) < record.log_ratio) {
    state.loglik = ll;
    record.accepted = true;
  } else {
    for (std::size_t j = 0; j < k_v; ++j) state.v[idx[j]] = old[j];
  }
  return record;
}

StepRecord update_v_block(BdmLatentState& state, const BdmModel& model, std::size_t k_v, Rng& rng) {
  BlockSelector selector(std::max<std::size_t>(state.v.size(), 1));
  return update_v_block(state, model, k_v, selector, rng);
}

StepRecord update_params_rwm(BdmLatentState& state, const BdmModel& model, double scale_a, double scale_d,
                             Rng& rng) {
  const BdmParams proposal{state.params.a + scale_a * std_normal(rng), state.params.d + scale_d * std_normal(rng)};
  StepRecord record{false, 2, -kInf};
  if (!proposal.valid()) return record;
  BdmPopulation pop;
  const double ll = bdm_loglik(model, proposal, state.u, state.w, state.v, &pop);
  record.log_ratio = ll - state.loglik;
  if (ll > -kInf && std::log(uniform01(rng)) < record.log_ratio) {
    state.params = proposal;
    state.population = std::move(pop);
    state.loglik = ll;
    record.accepted = true;
  }
  return record;
}

namespace {

EssReport safe_ess(const Trace& trace) {
  try {
    return effective_sample_size(trace);
  } catch (const std::exception&) {
    return {0.0, kInf, trace.values.size()};
  }
}

}  // namespace

BdmRunResult run_bdm_mcmc(const BdmModel& model, const BdmRunConfig& config) {
  model.data.validate();
  if (config.iterations <= config.burn_in) throw std::invalid_argument("run_bdm_mcmc: iterations must exceed burn_in");
  if (config.k < 1 || config.k > config.n_latent) throw std::out_of_range("run_bdm_mcmc: k must lie in [1, n_latent]");
  if (model.target_size < model.data.sample_size())
    throw std::invalid_argument("run_bdm_mcmc: target size is below the sample size");

  Rng rng = make_stream(config.seed, 0);
  BdmRunResult result;
  BdmLatentState state = initial_bdm_state(model, config.start, config.n_latent, rng);
  const std::size_t k_v = config.k_v == 0 ? model.data.cluster_count() : config.k_v;
  BlockSelector latent_selector(config.n_latent);
  BlockSelector v_selector(state.v.size());
  result.a.label = "a";
  result.d.label = "d";

  constexpr std::uint64_t kBatches = 50;
  const std::uint64_t recorded = config.iterations - config.burn_in;
  const std::uint64_t batch_len = std::max<std::uint64_t>(1, recorded / kBatches);
  stats::MeanAccumulator batches;
  std::uint64_t in_batch = 0, batch_accepts = 0, accepted = 0, param_accepts = 0, v_accepts = 0;

  for (std::uint64_t t = 0; t < config.iterations; ++t) {
    const bool p_ok = update_params_rwm(state, model, config.scale_a, config.scale_d, rng).accepted;
    const bool l_ok = update_latents_block(state, model, config.k, latent_selector, rng).accepted;
    const bool v_ok = update_v_block(state, model, k_v, v_selector, rng).accepted;
    if (t < config.burn_in) continue;
    accepted += l_ok;
    param_accepts += p_ok;
    v_accepts += v_ok;
    batch_accepts += l_ok;
    if (++in_batch == batch_len) {
      batches.add(static_cast<double>(batch_accepts) / static_cast<double>(batch_len));
      in_batch = batch_accepts = 0;
    }
    if (config.trace_thin > 0 && (t - config.burn_in) % config.trace_thin == 0) {
      result.a.values.push_back(state.params.a);
      result.d.values.push_back(state.params.d);
    }
  }
  const double n_rec = static_cast<double>(recorded);
  result.row.k = config.k;
  result.row.acceptance = static_cast<double>(accepted) / n_rec;
  result.row.mean_moved = static_cast<double>(config.k) * result.row.acceptance;
  result.row.mc_se = batches.std_error();
  result.param_acceptance = static_cast<double>(param_accepts) / n_rec;
  result.v_acceptance = static_cast<double>(v_accepts) / n_rec;
  if (result.a.values.size() >= 100) {
    result.ess_a = safe_ess(result.a);
    result.ess_d = safe_ess(result.d);
  }
  result.final_state = std::move(state);
  return result;
}

BdmSweep run_bdm_sweep(const BdmModel& model, const BdmRunConfig& config, const std::vector<std::size_t>& k_grid,
                       std::size_t threads) {
  if (k_grid.empty()) throw std::invalid_argument("run_bdm_sweep: empty k grid");
  std::vector<BdmRunResult> runs(k_grid.size());
  parallel_for(k_grid.size(), threads, [&](std::size_t g) {
    BdmRunConfig run = config;
    run.k = k_grid[g];
    run.seed = derive_seed(config.seed, g);
    runs[g] = run_bdm_mcmc(model, run);
  });
  std::vector<TuningRow> rows;
  for (const auto& r : runs) rows.push_back(r.row);
  BdmSweep sweep;
  sweep.table = tuning_summary(std::move(rows), "bdm");
  // tuning_summary sorts by k; reorder the ESS reports to match.
  for (const auto& row : sweep.table.rows) {
    const auto g = static_cast<std::size_t>(std::find(k_grid.begin(), k_grid.end(), row.k) - k_grid.begin());
    sweep.ess_a.push_back(runs[g].ess_a);
    sweep.ess_d.push_back(runs[g].ess_d);
  }
  return sweep;
}

ClusterData synthetic_clusters(const BdmParams& params, std::size_t target_size, std::size_t sample_size,
                               std::uint64_t seed) {
  if (sample_size < 1 || sample_size > target_size)
    throw std::invalid_argument("synthetic_clusters: need 1 <= sample_size <= target_size");
  Rng rng = make_stream(seed, 0);
  const std::size_t n = 40 * target_size + 1000;
  std::vector<double> u(n), w(n);
  for (std::size_t attempt = 0; attempt < 100'000; ++attempt) {
    for (auto& x : u) x = uniform01(rng);
    for (auto& x : w) x = uniform01(rng);
    const BdmPopulation pop = simulate_bdm(params, u, w, target_size);
    if (pop.status != BdmStatus::success) continue;
    std::vector<std::size_t> individuals;
    for (std::size_t t = 0; t < pop.type_counts.size(); ++t)
      individuals.insert(individuals.end(), pop.type_counts[t], t);
    std::vector<std::size_t> seen(pop.type_counts.size(), 0);
    for (std::size_t i = 0; i < sample_size; ++i) {
      std::swap(individuals[i], individuals[uniform_index(rng, i, individuals.size() - 1)]);
      ++seen[individuals[i]];
    }
    std::vector<std::size_t> sizes;
    for (std::size_t s : seen)
      if (s > 0) sizes.push_back(s);
    return ClusterData::from_sizes(sizes);
  }
  throw std::runtime_error("synthetic_clusters: the process never reached the target size");
}

}  // namespace indscale
