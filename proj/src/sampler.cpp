#include "indscale/sampler.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

#include "indscale/stats.hpp"

namespace indscale {

ChainState ChainState::stationary(const DensityPair& pair, std::size_t n, Rng& rng) {
  std::vector<double> values(n);
  for (auto& v : values) v = pair.sample_target(rng);
  return from_values(pair, std::move(values));
}

ChainState ChainState::from_values(const DensityPair& pair, std::vector<double> values) {
  ChainState state;
  state.x = std::move(values);
  state.refresh_cache(pair);
  return state;
}

bool ChainState::cache_consistent(const DensityPair& pair) const {
  if (cached_log_weight.size() != x.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (cached_log_weight[i] != pair.log_weight(x[i])) return false;
  return true;
}

void ChainState::refresh_cache(const DensityPair& pair) {
  cached_log_weight.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    cached_log_weight[i] = pair.log_weight(x[i]);
    if (cached_log_weight[i] == -INFINITY)
      throw std::domain_error("chain state has zero target density at component " + std::to_string(i));
  }
}

BlockSelector::BlockSelector(std::size_t n) : perm_(n) {
  if (n == 0) throw std::invalid_argument("BlockSelector: n must be positive");
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
}

std::span<const std::size_t> BlockSelector::select(std::size_t k, Rng& rng) {
  const std::size_t n = perm_.size();
  if (k < 1 || k > n)
    throw std::out_of_range("block size k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  for (std::size_t i = 0; i < k; ++i) std::swap(perm_[i], perm_[uniform_index(rng, i, n - 1)]);
  return {perm_.data(), k};
}

double block_log_ratio(const ChainState& state, const DensityPair& pair,
                       std::span<const std::size_t> indices, std::span<const double> proposed) {
  if (indices.size() != proposed.size())
    throw std::invalid_argument("block_log_ratio: indices and proposal differ in length");
  double log_ratio = 0.0;
  for (std::size_t j = 0; j < indices.size(); ++j)
    log_ratio += pair.log_weight(proposed[j]) - state.cached_log_weight.at(indices[j]);
  return log_ratio;
}

StepRecord apply_block_proposal(ChainState& state, const DensityPair& pair,
                                std::span<const std::size_t> indices, std::span<const double> proposed,
                                double log_u) {
  StepRecord record{false, indices.size(), block_log_ratio(state, pair, indices, proposed)};
  if (log_u < record.log_ratio) {
    for (std::size_t j = 0; j < indices.size(); ++j) {
      state.x[indices[j]] = proposed[j];
      state.cached_log_weight[indices[j]] = pair.log_weight(proposed[j]);
    }
    record.accepted = true;
  }
  ++state.iteration;
  return record;
}

BlockIndependenceSampler::BlockIndependenceSampler(DensityPair pair, std::size_t n)
    : pair_(std::move(pair)), selector_(n), proposed_(n), proposed_weight_(n) {}

StepRecord BlockIndependenceSampler::step(ChainState& state, std::size_t k, Rng& rng) {
  if (state.size() != selector_.size())
    throw std::invalid_argument("BlockIndependenceSampler: state dimension mismatch");
  last_ = selector_.select(k, rng);
  const auto indices = last_;
  return pair_.visit([&](const auto& fam) {
    double log_ratio = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double y = fam.sample_proposal(rng);
      const double gy = fam.log_weight(y);
      proposed_[j] = y;
      proposed_weight_[j] = gy;
      log_ratio += gy - state.cached_log_weight[indices[j]];
    }
    if (std::isnan(log_ratio))
      throw std::domain_error("block step: NaN log ratio (current state has zero target density?)");
    StepRecord record{false, k, log_ratio};
    if (log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio) {
      for (std::size_t j = 0; j < k; ++j) {
        state.x[indices[j]] = proposed_[j];
        state.cached_log_weight[indices[j]] = proposed_weight_[j];
      }
      record.accepted = true;
    }
    ++state.iteration;
    return record;
  });
}

StepRecord block_independence_step(ChainState& state, const DensityPair& pair, std::size_t k, Rng& rng) {
  BlockIndependenceSampler sampler(pair, state.size());
  return sampler.step(state, k, rng);
}

ChainResult run_chain(const DensityPair& pair, const ChainConfig& config) {
  if (config.iterations <= config.burn_in)
    throw std::invalid_argument("run_chain: iterations must exceed burn_in");
  if (config.k < 1 || config.k > config.n)
    throw std::out_of_range("run_chain: k must lie in [1, n]");

  Rng rng = make_stream(config.seed, 0);
  ChainState state;
  if (config.start == StartMode::stationary) {
    state = ChainState::stationary(pair, config.n, rng);
  } else {
    if (config.custom_start.size() != config.n)
      throw std::invalid_argument("run_chain: custom start must have n components");
    state = ChainState::from_values(pair, config.custom_start);
  }

  BlockIndependenceSampler sampler(pair, config.n);
  ChainResult result;
  if (config.trace_thin > 0) result.trace = Trace{{}, pair.label() + " x[0]"};

  constexpr std::uint64_t kBatches = 50;
  const std::uint64_t recorded = config.iterations - config.burn_in;
  const std::uint64_t batch_len = std::max<std::uint64_t>(1, recorded / kBatches);
  stats::MeanAccumulator batch_means;
  std::uint64_t in_batch = 0;
  std::uint64_t batch_accepts = 0;

  for (std::uint64_t t = 0; t < config.iterations; ++t) {
    const StepRecord rec = sampler.step(state, config.k, rng);
    if (t < config.burn_in) continue;
    result.accepted += rec.accepted;
    batch_accepts += rec.accepted;
    if (++in_batch == batch_len) {
      batch_means.add(static_cast<double>(batch_accepts) / static_cast<double>(batch_len));
      in_batch = 0;
      batch_accepts = 0;
    }
    if (result.trace && (t - config.burn_in) % config.trace_thin == 0) result.trace->values.push_back(state.x[0]);
  }
  result.recorded = recorded;
  result.row.k = config.k;
  result.row.acceptance = static_cast<double>(result.accepted) / static_cast<double>(recorded);
  result.row.mean_moved = static_cast<double>(config.k) * result.row.acceptance;
  result.row.mc_se = batch_means.std_error();
  return result;
}

}  // namespace indscale
