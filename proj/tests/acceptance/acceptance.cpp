// Acceptance gates. Prints one "criterion N: PASS|FAIL ..." line per gate and
// exits nonzero if any selected gate fails. `--criterion N` runs one gate.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "indscale/bdm.hpp"
#include "indscale/densities.hpp"
#include "indscale/diagnostics.hpp"
#include "indscale/io.hpp"
#include "indscale/product.hpp"
#include "indscale/sampler.hpp"
#include "indscale/scaling.hpp"
#include "indscale/sir.hpp"
#include "indscale/stats.hpp"

using namespace indscale;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[fail] ";
    }
    detail << what << "; ";
  }
};

std::string num(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// 1. Discrepancy table.
void criterion_1(Outcome& o) {
  const std::vector<std::pair<double, double>> gaussian{
      {1.05, 0.0048}, {1.1, 0.0182}, {1.2, 0.0672}, {1.5, 0.347}, {2.0, 1.125}};
  for (auto [lambda, expected] : gaussian) {
    const double got = discrepancy_gaussian(lambda).value;
    // 0.347 is published to three decimals only.
    const double tol = lambda == 1.5 ? 5e-4 : 5e-5;
    o.check(std::abs(got - expected) <= tol, "gaussian " + num(lambda, 2) + ": " + num(got));
  }
  for (double nu : {1.0, 2.0})
    o.check(!discrepancy_t(nu, 1'000'000, 1).finite(), "t" + num(nu, 0) + ": inf");
  const std::vector<std::pair<double, double>> student{{5, 0.1582}, {10, 0.0338}, {20, 0.0083}};
  for (auto [nu, expected] : student) {
    const auto r = discrepancy_t(nu, 1'000'000, 1);
    o.check(std::abs(r.value - expected) <= 3 * r.std_error,
            "t" + num(nu, 0) + ": " + num(r.value) + " se " + num(r.std_error));
  }
}

// 2. Scaling constant.
void criterion_2(Outcome& o) {
  const auto opt = maximize_gaussian_efficiency();
  o.check(std::abs(opt.scaled_block - 2.835) <= 0.01, "kI = " + num(opt.scaled_block));
  o.check(std::abs(opt.acceptance - 0.234) <= 0.001, "acceptance = " + num(opt.acceptance));
}

// 3. Gaussian product sweeps.
void criterion_3(Outcome& o) {
  std::map<double, double> gap;
  for (double lambda : {1.05, 1.2, 2.0}) {
    ExperimentConfig c;
    c.pair = PairSpec{PairSpec::Family::gaussian, lambda};
    c.n = 1000;
    c.iterations = 100'000;
    c.grid_points = 10;
    const auto table = run_sweep(c);
    const auto cmp = efficiency_vs_theory(table);
    gap[lambda] = cmp.max_gap;
    const double a = table.best().acceptance;
    o.check(a >= 0.18 && a <= 0.30, "lambda " + num(lambda, 2) + ": best k " + std::to_string(table.best().k) +
                                        " acceptance " + num(a, 3) + " gap " + num(cmp.max_gap, 3));
  }
  o.check(gap[1.05] < 0.1, "gap(1.05) < 0.1");
  o.check(gap[2.0] > gap[1.05], "gap(2) > gap(1.05)");
}

// 4. Cauchy proposal against a Gaussian target.
void criterion_4(Outcome& o) {
  ExperimentConfig c;
  c.pair = PairSpec{PairSpec::Family::student_t, 1.0};
  c.k_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto table = run_sweep(c);
  const auto& best = table.best();
  o.check(best.k >= 2 && best.k <= 4, "best k = " + std::to_string(best.k));
  o.check(std::abs(best.acceptance - 0.383) <= 0.05, "acceptance = " + num(best.acceptance, 3));
}

// 5. Uniform special case.
void criterion_5(Outcome& o) {
  ChainConfig c;
  c.n = 1000;
  c.k = 20;
  c.iterations = 100'000;
  const auto r = run_chain(DensityPair::uniform_eps(0.05), c);
  const double expected = std::pow(1.05, -20.0);
  o.check(std::abs(r.row.acceptance - expected) <= 3 * r.row.mc_se,
          "acceptance " + num(r.row.acceptance) + " se " + num(r.row.mc_se) + " vs " + num(expected));
  const double limit = uniform_case(1e-4).acceptance;
  o.check(std::abs(limit - std::exp(-1.0)) <= 1e-3, "eps 1e-4 acceptance " + num(limit));
}

// 6. Weak limit of the rescaled first component.
void criterion_6(Outcome& o) {
  const auto pair = DensityPair::gaussian(1.5);
  const auto main = scaled_chain_vs_limit(pair, 1000, 8, 1000, 1);
  o.check(main.chain_matches_limit(),
          "chain rate " + num(main.chain.rate) + " vs limit " + num(main.limit.rate));
  o.check(main.chain_matches_theory(), "vs theory " + num(main.theory.rate));
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::vector<double> gaps;
    for (std::size_t n : {100, 300, 1000})
      gaps.push_back(scaled_chain_vs_limit(pair, n, 8, 1000, seed).conditional_rate_discrepancy);
    o.check(gaps[0] > gaps[1] && gaps[1] > gaps[2], "seed " + std::to_string(seed) + " discrepancy " + num(gaps[0], 3) +
                                                       " > " + num(gaps[1], 3) + " > " + num(gaps[2], 3));
  }
}

// k whose acceptance is nearest 0.234 must reach 90% of the best mean moved.
bool near_optimal_rule(const TuningTable& t, std::string& note) {
  const auto near = std::min_element(t.rows.begin(), t.rows.end(), [](const auto& a, const auto& b) {
    return std::abs(a.acceptance - 0.234) < std::abs(b.acceptance - 0.234);
  });
  note = "k@0.234 = " + std::to_string(near->k) + " at " + num(near->normalized_efficiency, 3);
  return near->normalized_efficiency >= 0.9;
}

// 7. Epidemic infection-time updates.
void criterion_7(Outcome& o) {
  const std::string path = std::string(INDSCALE_DATA_DIR) + "/abakaliki_removals.txt";
  const bool real = std::filesystem::exists(path);
  const EpidemicData data =
      real ? EpidemicData::from_times(load_removal_times(path, 120).removal_times, 120)
           : simulate_sir_sized(120, {0.2, 1.0, 0.1}, 25, 35, 1).data;
  std::vector<std::size_t> grid;
  for (std::size_t k = 1; k <= data.size(); ++k) grid.push_back(k);
  o.detail << (real ? "removal file; " : "simulated fallback; ");

  const std::vector<std::tuple<double, std::size_t, std::size_t>> gates{{1.0, 9, 3}, {3.0, 17, 3}, {10.0, 30, 0}};
  std::vector<std::size_t> best;
  for (auto [alpha, centre, width] : gates) {
    SirRunConfig c;
    c.alpha = alpha;
    c.iterations = 100'000;
    c.trace_thin = 0;
    const auto table = run_sir_sweep(data, c, grid);
    const std::size_t k = table.best().k;
    best.push_back(k);
    std::string note;
    const bool rule = near_optimal_rule(table, note);
    if (real) {
      const bool in = k + width >= centre && k <= centre + width;
      o.check(in, "alpha " + num(alpha, 0) + ": best k " + std::to_string(k) + " (window " + std::to_string(centre) +
                      "+-" + std::to_string(width) + ")");
    }
    o.check(rule, "alpha " + num(alpha, 0) + ": " + note);
  }
  // On simulated data only the ordering of the optima is pinned.
  if (!real) o.check(best[0] <= best[1] && best[1] <= best[2], "best k non-decreasing in alpha");

  SirRunConfig c;
  c.mode = AlphaMode::unknown;
  c.iterations = 100'000;
  c.trace_thin = 0;
  const auto table = run_sir_sweep(data, c, grid);
  double lowest = 1.0;
  for (const auto& r : table.rows) lowest = std::min(lowest, r.acceptance);
  o.check(lowest > 0.234, "unknown alpha: lowest acceptance " + num(lowest, 3));
}

// 8. Genotype cluster model.
void criterion_8(Outcome& o) {
  const auto table1 = load_clusters(std::string(INDSCALE_DATA_DIR) + "/table1_clusters.txt");
  o.check(table1.sample_size() == 473, "table 1 sample size " + std::to_string(table1.sample_size()));

  BdmModel model;
  model.target_size = 500;
  model.data = synthetic_clusters({0.6, 0.2}, 500, 100, 7);
  BdmRunConfig c;
  c.n_latent = 6000;
  c.iterations = 100'000;
  const std::vector<std::size_t> grid{10, 30, 100, 300, 1000, 2000, 6000};
  const auto sweep = run_bdm_sweep(model, c, grid);
  const auto& rows = sweep.table.rows;
  bool monotone = true, moved = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    monotone &= rows[i].acceptance <= rows[i - 1].acceptance + 3 * std::hypot(rows[i].mc_se, rows[i - 1].mc_se);
    moved &= rows[i].mean_moved >= rows[i - 1].mean_moved;
  }
  std::string acc;
  for (const auto& r : rows) acc += std::to_string(r.k) + ":" + num(r.acceptance, 3) + " ";
  o.check(monotone, "acceptance " + acc);
  o.check(moved, "mean moved non-decreasing");
  const std::size_t last = rows.size() - 1, third = last - 1;  // k = 6000 and k = 2000
  for (auto [name, ess] : {std::pair{"a", &sweep.ess_a}, std::pair{"d", &sweep.ess_d}}) {
    const double hi = (*ess)[last].ess, lo = (*ess)[third].ess;
    o.check(std::abs(hi - lo) <= 0.25 * lo, std::string("ESS ") + name + " " + num(lo, 0) + " -> " + num(hi, 0));
  }
}

// 9. Property suites.
double enumerate_probability(const std::vector<std::size_t>& counts, std::vector<std::size_t> sizes) {
  std::vector<std::size_t> owner;
  for (std::size_t t = 0; t < counts.size(); ++t) owner.insert(owner.end(), counts[t], t);
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  std::sort(sizes.begin(), sizes.end());
  std::size_t hits = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << owner.size()); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
    ++total;
    std::vector<std::size_t> per(counts.size(), 0);
    for (std::size_t i = 0; i < owner.size(); ++i)
      if (mask >> i & 1u) ++per[owner[i]];
    std::vector<std::size_t> got;
    for (auto c : per)
      if (c) got.push_back(c);
    std::sort(got.begin(), got.end());
    hits += got == sizes;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

void criterion_9(Outcome& o) {
  {
    ChainConfig c;
    c.n = 2;
    c.k = 1;
    c.iterations = 1'000'000;
    c.seed = 21;
    c.trace_thin = 20;
    const auto r = run_chain(DensityPair::gaussian(1.5), c);
    const double p = stats::ks_test(r.trace->values, [](double x) { return stats::normal_cdf(x); }).p_value;
    o.check(p > 0.01, "stationarity KS p " + num(p, 3));
  }
  {
    const auto sim = simulate_sir_sized(200, {0.23, 2.0, 0.4}, 40, 60, 3);
    auto state = initial_sir_state(sim.data, 2.0);
    state.params = {0.23, 2.0, 0.4};
    state.refresh(sim.data);
    Rng rng = make_stream(4, 0);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
      BlockSelector selector(sim.data.size());
      const auto span = selector.select(5, rng);
      const std::vector<std::size_t> idx(span.begin(), span.end());
      std::vector<double> prop(idx.size());
      for (std::size_t j = 0; j < idx.size(); ++j)
        prop[j] = sim.data.removal_times[idx[j]] - gamma_rate(rng, 2.0, 0.4);
      auto after = state.infection_times;
      for (std::size_t j = 0; j < idx.size(); ++j) after[idx[j]] = prop[j];
      const double l0 = sir_log_likelihood(state.infection_times, sim.data, state.params);
      const double l1 = sir_log_likelihood(after, sim.data, state.params);
      double dq = 0.0;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const std::size_t i = idx[j];
        dq += stats::log_gamma_pdf(sim.data.removal_times[i] - prop[j], 2.0, 0.4) -
              stats::log_gamma_pdf(sim.data.removal_times[i] - state.infection_times[i], 2.0, 0.4);
      }
      auto trial = state;
      const auto rec = apply_infection_proposal(trial, sim.data, idx, prop, -INFINITY);
      if (std::isfinite(l1)) worst = std::max(worst, std::abs(rec.log_ratio - (l1 - l0 - dq)));
      if (rec.accepted) state = trial;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1e", worst);
    o.check(worst <= 1e-10, std::string("cancellation max error ") + buf);
  }
  {
    Rng rng = make_stream(8, 0);
    bool pure = true, tail = true;
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> u(3000), w(3000);
      for (auto& x : u) x = uniform01(rng);
      for (auto& x : w) x = uniform01(rng);
      const auto a = simulate_bdm({0.6, 0.2}, u, w, 100);
      const auto b = simulate_bdm({0.6, 0.2}, u, w, 100);
      pure &= a.type_counts == b.type_counts && a.status == b.status && a.events_used == b.events_used;
      if (a.status != BdmStatus::success) continue;
      for (std::size_t i = a.events_used; i < u.size(); ++i) u[i] = w[i] = uniform01(rng);
      const auto c = simulate_bdm({0.6, 0.2}, u, w, 100);
      tail &= c.type_counts == a.type_counts && c.events_used == a.events_used;
    }
    o.check(pure, "simulate_bdm purity");
    o.check(tail, "unused tail invariance");
  }
  {
    BdmPopulation pop;
    pop.type_counts = {3, 2, 1};
    pop.total = 6;
    const std::vector<std::size_t> sizes{2, 1, 1};
    const auto data = ClusterData::from_sizes(sizes);
    stats::MeanAccumulator acc;
    Rng rng = make_stream(5, 0);
    std::vector<double> v(obs_v_length(data, 1));
    for (int t = 0; t < 200'000; ++t) {
      for (auto& x : v) x = uniform01(rng);
      acc.add(std::exp(estimate_obs_loglik(pop, data, v, 1).log_value));
    }
    const double exact = enumerate_probability(pop.type_counts, sizes);
    o.check(std::abs(acc.mean() - exact) <= 3 * acc.std_error(),
            "enumeration " + num(acc.mean()) + " vs " + num(exact));
  }
  {
    Rng rng = make_stream(2, 0);
    std::vector<double> x(100'000);
    double prev = std_normal(rng) / std::sqrt(1 - 0.81);
    for (auto& v : x) v = prev = 0.9 * prev + std_normal(rng);
    const double iact = effective_sample_size(Trace{x, "ar1"}).iact;
    o.check(std::abs(iact - 19.0) <= 0.2 * 19.0, "AR(1) iact " + num(iact, 2) + " vs 19");
  }
}

const std::vector<std::function<void(Outcome&)>> kCriteria{criterion_1, criterion_2, criterion_3,
                                                           criterion_4, criterion_5, criterion_6,
                                                           criterion_7, criterion_8, criterion_9};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      std::size_t n = 0;
      const char* s = argv[++i];
      const auto [end, ec] = std::from_chars(s, s + std::strlen(s), n);
      if (ec != std::errc{} || *end != '\0' || n < 1 || n > kCriteria.size()) {
        std::fprintf(stderr, "criterion must be 1..%zu\n", kCriteria.size());
        return 2;
      }
      selected.push_back(n);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 2;
    }
  }
  if (selected.empty())
    for (std::size_t n = 1; n <= kCriteria.size(); ++n) selected.push_back(n);

  bool all = true;
  for (std::size_t n : selected) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      kCriteria[n - 1](o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu: %s %s(%.0f s)\n", n, o.pass ? "PASS" : "FAIL", o.detail.str().c_str(), secs);
    std::fflush(stdout);
    all &= o.pass;
  }
  return all ? 0 : 1;
}
