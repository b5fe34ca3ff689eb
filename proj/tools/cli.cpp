#include "cli.hpp"

#include <CLI11.hpp>
#include <boost/version.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "indscale/bdm.hpp"
#include "indscale/densities.hpp"
#include "indscale/io.hpp"
#include "indscale/parallel.hpp"
#include "indscale/product.hpp"
#include "indscale/scaling.hpp"
#include "indscale/sir.hpp"

namespace indscale::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Values = std::map<std::string, std::string>;

struct Context {
  std::string command;
  Values values;
  fs::path out_dir;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool paper = false;
  std::ostream& out;
};

struct Command {
  std::string name;
  std::string help;
  Values desk;   // every key the command accepts, with its desk default
  Values paper;  // defaults replaced under --scale paper
  std::function<void(Context&)> run;
};

const std::set<std::string> kCommonKeys{"seed", "out", "scale", "threads"};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

Values read_config(const fs::path& path, const Command& cmd) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  Values values;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path.string() + ":" + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (!cmd.desk.count(key) && !kCommonKeys.count(key))
      throw UsageError(path.string() + ":" + std::to_string(number) + ": unknown key '" + key + "' for " + cmd.name);
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

template <class T>
T parse_integer(const Values& v, const std::string& key) {
  const std::string& text = v.at(key);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw UsageError("'" + key + "' must be a non-negative integer, got '" + text + "'");
  return value;
}

std::size_t get_size(const Values& v, const std::string& key) { return parse_integer<std::size_t>(v, key); }
std::uint64_t get_u64(const Values& v, const std::string& key) { return parse_integer<std::uint64_t>(v, key); }

double get_double(const Values& v, const std::string& key) {
  const std::string& text = v.at(key);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw UsageError("'" + key + "' must be a number, got '" + text + "'");
  return value;
}

std::vector<std::size_t> get_size_list(const Values& v, const std::string& key) {
  std::vector<std::size_t> out;
  std::stringstream ss(v.at(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    Values one{{key, trim(item)}};
    out.push_back(get_size(one, key));
  }
  return out;
}

PairSpec get_pair(const Values& v) {
  if (v.at("pair").empty()) throw UsageError("--pair is required (e.g. gaussian:1.2, t:5, uniform_eps:0.05)");
  try {
    return PairSpec::parse(v.at("pair"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string file_label(std::string s) {
  for (char& c : s)
    if (c == ':' || c == '(' || c == ')' || c == '/' || c == ' ') c = '_';
  return s;
}

std::string fixed(double x, int digits) {
  if (!std::isfinite(x)) return format_number(x);
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

void print_table(std::ostream& out, const TuningTable& table) {
  out << "k\tacceptance\tse\tmean_moved\tnormalized\n";
  for (const auto& r : table.rows)
    out << r.k << '\t' << fixed(r.acceptance, 4) << '\t' << fixed(r.mc_se, 4) << '\t' << fixed(r.mean_moved, 3) << '\t'
        << fixed(r.normalized_efficiency, 3) << '\n';
  out << "best k = " << table.best().k << " (acceptance " << fixed(table.best().acceptance, 4) << ")\n";
}

void write_manifest(const Context& ctx) {
  std::string text = "indscale 0.1.0\ncommand = " + ctx.command + "\nboost = " + BOOST_LIB_VERSION +
                     "\ncompiler = " + __VERSION__ + "\n";
  for (const auto& [key, value] : ctx.values) text += key + " = " + value + "\n";
  write_text(ctx.out_dir / "manifest.txt", text);
}

// theory ---------------------------------------------------------------------

void run_theory(Context& ctx) {
  const auto& v = ctx.values;
  const DensityPair pair = DensityPair::from_spec(get_pair(v));
  const std::size_t n = get_size(v, "n");
  const DiscrepancyResult disc = discrepancy(pair, get_u64(v, "mc"), ctx.seed);
  std::size_t k = optimal_k(disc.value, n);
  double predicted = std::nan("");
  if (disc.finite() && disc.value > 0.0)
    predicted = gaussian_acceptance_approx(static_cast<double>(k), disc.value, 2.0 * disc.value);
  if (disc.finite() && disc.value == 0.0) predicted = 1.0;
  // Divergent I: the uniform family has its own exact optimum, acceptance (1+eps)^-k.
  const auto& spec = pair.spec();
  if (spec && spec->family == PairSpec::Family::uniform_eps) {
    const UniformOptimum opt = uniform_case(spec->parameter);
    const double lo = std::max(1.0, std::floor(opt.k_opt));
    const double best = lo * std::pow(1.0 + spec->parameter, -lo) >= (lo + 1.0) * std::pow(1.0 + spec->parameter, -lo - 1.0)
                            ? lo
                            : lo + 1.0;
    k = std::min(n, static_cast<std::size_t>(best));
    predicted = std::pow(1.0 + spec->parameter, -static_cast<double>(k));
  }

  ctx.out << "pair = " << pair.label() << '\n';
  ctx.out << "I = " << (disc.finite() ? fixed(disc.value, 4) : std::string("inf")) << " (" << to_string(disc.method);
  if (disc.method == DiscrepancyMethod::monte_carlo) ctx.out << ", se " << fixed(disc.std_error, 4);
  ctx.out << ")\n";
  ctx.out << "optimal k = " << k << '\n';
  ctx.out << "predicted acceptance = " << fixed(predicted, 4) << '\n';

  const std::size_t points = get_size(v, "points");
  if (points < 1) throw UsageError("'points' must be >= 1");
  std::string csv = "acceptance,normalized_efficiency\n";
  for (std::size_t i = 1; i <= points; ++i) {
    const double a = static_cast<double>(i) / static_cast<double>(points + 1);
    csv += format_number(a) + ',' + format_number(theoretical_efficiency(a)) + '\n';
  }
  write_text(ctx.out_dir / "theory_curve.csv", csv);
}

// product --------------------------------------------------------------------

void run_product(Context& ctx) {
  const auto& v = ctx.values;
  ExperimentConfig config;
  config.pair = get_pair(v);
  config.n = get_size(v, "n");
  config.iterations = get_u64(v, "iters");
  config.burn_in = get_u64(v, "burnin");
  config.grid_points = get_size(v, "points");
  config.replicates = get_size(v, "replicates");
  config.seed = ctx.seed;
  config.threads = ctx.threads;
  if (!v.at("grid").empty()) config.k_grid = get_size_list(v, "grid");
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const TuningTable table = run_sweep(config);
  const EfficiencyComparison cmp = efficiency_vs_theory(table);
  ctx.out << "pair = " << table.label << ", n = " << config.n << ", iterations = " << config.iterations << '\n';
  print_table(ctx.out, table);
  ctx.out << "max |observed - theoretical| efficiency = " << fixed(cmp.max_gap, 4) << '\n';
  const fs::path path = ctx.out_dir / ("tuning_" + file_label(table.label) + ".csv");
  write_tuning_csv(table, path);
  ctx.out << "wrote " << path.string() << '\n';
}

// jumplim --------------------------------------------------------------------

void run_jumplim(Context& ctx) {
  const auto& v = ctx.values;
  const DensityPair pair = DensityPair::from_spec(get_pair(v));
  LimitComparisonOptions opts;
  opts.hstar_samples = get_u64(v, "hstar");
  opts.rate_probes = get_size(v, "probes");
  opts.rate_probe_samples = get_u64(v, "probe_samples");
  opts.threads = ctx.threads;
  const std::size_t n = get_size(v, "n");
  const std::size_t k = get_size(v, "k");
  const double horizon = get_double(v, "horizon");
  if (k < 1 || k > n) throw UsageError("'k' must lie in [1, n]");
  if (!(horizon >= 1.0)) throw UsageError("'horizon' must be >= 1");
  const LimitComparison r = scaled_chain_vs_limit(pair, n, k, horizon, ctx.seed, opts);
  ctx.out << "pair = " << pair.label() << ", n = " << n << ", k = " << k << ", horizon = " << horizon << '\n';
  ctx.out << "chain rate  = " << fixed(r.chain.rate, 4) << " +- " << fixed(r.chain.std_error, 4) << '\n';
  ctx.out << "limit rate  = " << fixed(r.limit.rate, 4) << " +- " << fixed(r.limit.std_error, 4) << '\n';
  ctx.out << "k E[1^W_k]  = " << fixed(r.theory.rate, 4) << " +- " << fixed(r.theory.std_error, 4) << '\n';
  ctx.out << "chain vs limit: " << (r.chain_matches_limit() ? "agree" : "differ") << " at 3 SE\n";
  ctx.out << "occupation KS p-value: chain " << fixed(r.chain_marginal_ks_p, 3) << ", limit "
          << fixed(r.limit_marginal_ks_p, 3) << '\n';
  ctx.out << "conditional rate discrepancy = " << fixed(r.conditional_rate_discrepancy, 4) << " +- "
          << fixed(r.conditional_rate_discrepancy_se, 4) << '\n';
  std::string csv =
      "n,k,horizon,chain_rate,chain_se,limit_rate,limit_se,theory_rate,theory_se,chain_ks_p,limit_ks_p,"
      "rate_discrepancy,rate_discrepancy_se\n";
  for (double x : {static_cast<double>(n), static_cast<double>(k), horizon, r.chain.rate, r.chain.std_error,
                   r.limit.rate, r.limit.std_error, r.theory.rate, r.theory.std_error, r.chain_marginal_ks_p,
                   r.limit_marginal_ks_p, r.conditional_rate_discrepancy})
    csv += format_number(x) + ',';
  csv += format_number(r.conditional_rate_discrepancy_se) + '\n';
  write_text(ctx.out_dir / "jumplim.csv", csv);
}

// sir ------------------------------------------------------------------------

void run_sir(Context& ctx) {
  const auto& v = ctx.values;
  if (v.at("data").empty()) throw UsageError("--data <removal times file> is required");
  const EpidemicData data = load_removal_times(v.at("data"), get_size(v, "N"));
  SirRunConfig config;
  if (v.at("alpha") == "unknown") {
    config.mode = AlphaMode::unknown;
    config.alpha = 1.0;
  } else {
    config.alpha = get_double(v, "alpha");
    if (!(config.alpha > 0.0)) throw UsageError("'alpha' must be positive or 'unknown'");
  }
  config.iterations = get_u64(v, "iters");
  config.burn_in = get_u64(v, "burnin");
  config.trace_thin = get_u64(v, "thin");
  config.alpha_scale = get_double(v, "alpha_scale");
  config.seed = ctx.seed;
  if (config.iterations <= config.burn_in) throw UsageError("'iters' must exceed 'burnin'");
  ctx.out << "m = " << data.size() << ", N = " << data.population << ", alpha = " << v.at("alpha") << '\n';

  if (v.at("k") == "sweep") {
    std::vector<std::size_t> grid;
    for (std::size_t k = 1; k <= data.size(); ++k) grid.push_back(k);
    const TuningTable table = run_sir_sweep(data, config, grid, ctx.threads);
    print_table(ctx.out, table);
    write_tuning_csv(table, ctx.out_dir / "sir_tuning.csv");
    return;
  }
  config.k = get_size(v, "k");
  if (config.k < 1 || config.k > data.size()) throw UsageError("'k' must lie in [1, m] or be 'sweep'");
  const SirRunResult result = run_sir_mcmc(data, config);
  const TuningTable table = tuning_summary({result.row}, "sir");
  print_table(ctx.out, table);
  write_tuning_csv(table, ctx.out_dir / "sir_tuning.csv");
  write_trace_csv({result.beta, result.delta, result.alpha}, ctx.out_dir / "sir_trace.csv", config.trace_thin);
}

// bdm ------------------------------------------------------------------------

std::vector<std::size_t> bdm_default_grid(std::size_t n_latent) {
  std::vector<std::size_t> grid;
  for (std::size_t k = 10; k < n_latent / 3; k *= 10) {
    grid.push_back(k);
    if (3 * k < n_latent / 3) grid.push_back(3 * k);
  }
  if (n_latent >= 3) grid.push_back(n_latent / 3);
  grid.push_back(n_latent);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

void run_bdm(Context& ctx) {
  const auto& v = ctx.values;
  BdmModel model;
  model.target_size = get_size(v, "ntarget");
  model.n_rep = get_size(v, "nrep");
  if (model.n_rep < 1) throw UsageError("'nrep' must be >= 1");
  if (v.at("data").empty()) {
    const std::size_t sample = get_size(v, "sample");
    if (sample < 1 || sample > model.target_size) throw UsageError("'sample' must lie in [1, ntarget]");
    model.data = synthetic_clusters({0.6, 0.2}, model.target_size, sample, ctx.seed);
    ctx.out << "data = synthetic sample of " << sample << " from a population simulated at a = 0.6, d = 0.2\n";
  } else {
    model.data = load_clusters(v.at("data"));
    ctx.out << "data = " << v.at("data") << '\n';
  }
  if (model.target_size < model.data.sample_size())
    throw UsageError("'ntarget' (" + std::to_string(model.target_size) + ") is below the sample size " +
                     std::to_string(model.data.sample_size()));
  BdmRunConfig config;
  config.n_latent = get_size(v, "nlatent");
  config.k_v = get_size(v, "kv");
  config.iterations = get_u64(v, "iters");
  config.burn_in = get_u64(v, "burnin");
  config.scale_a = get_double(v, "scale_a");
  config.scale_d = get_double(v, "scale_d");
  config.start = {get_double(v, "start_a"), get_double(v, "start_d")};
  config.trace_thin = get_u64(v, "thin");
  config.seed = ctx.seed;
  if (!config.start.valid()) throw UsageError("start (a, d) must satisfy a, d > 0, a + d < 1");
  if (config.iterations <= config.burn_in) throw UsageError("'iters' must exceed 'burnin'");
  ctx.out << "sample size = " << model.data.sample_size() << ", clusters = " << model.data.cluster_count()
          << ", N_T = " << model.target_size << ", n_latent = " << config.n_latent << '\n';

  std::vector<std::size_t> grid;
  if (v.at("k") == "sweep") {
    grid = bdm_default_grid(config.n_latent);
  } else {
    grid = get_size_list(v, "k");
  }
  for (std::size_t k : grid)
    if (k < 1 || k > config.n_latent) throw UsageError("'k' values must lie in [1, nlatent]");

  std::vector<std::pair<std::string, EssReport>> ess;
  if (grid.size() == 1) {
    config.k = grid.front();
    const BdmRunResult result = run_bdm_mcmc(model, config);
    const TuningTable table = tuning_summary({result.row}, "bdm");
    print_table(ctx.out, table);
    ctx.out << "ESS a = " << fixed(result.ess_a.ess, 1) << ", ESS d = " << fixed(result.ess_d.ess, 1) << '\n';
    write_tuning_csv(table, ctx.out_dir / "bdm_tuning.csv");
    write_trace_csv({result.a, result.d}, ctx.out_dir / "bdm_trace.csv", config.trace_thin);
    ess = {{"k=" + std::to_string(config.k) + ":a", result.ess_a}, {"k=" + std::to_string(config.k) + ":d", result.ess_d}};
  } else {
    const BdmSweep sweep = run_bdm_sweep(model, config, grid, ctx.threads);
    print_table(ctx.out, sweep.table);
    for (std::size_t i = 0; i < sweep.table.rows.size(); ++i) {
      const std::string k = std::to_string(sweep.table.rows[i].k);
      ctx.out << "k = " << k << ": ESS a = " << fixed(sweep.ess_a[i].ess, 1) << ", ESS d = " << fixed(sweep.ess_d[i].ess, 1)
              << '\n';
      ess.emplace_back("k=" + k + ":a", sweep.ess_a[i]);
      ess.emplace_back("k=" + k + ":d", sweep.ess_d[i]);
    }
    write_tuning_csv(sweep.table, ctx.out_dir / "bdm_tuning.csv");
  }
  write_ess_csv(ess, ctx.out_dir / "bdm_ess.csv");
}

std::vector<Command> commands() {
  return {
      {"theory", "Discrepancy I, optimal block size and the theoretical efficiency curve",
       {{"pair", ""}, {"n", "1000"}, {"mc", "1000000"}, {"points", "99"}},
       {},
       run_theory},
      {"product", "k-grid sweep of the block sampler on an n-fold product target",
       {{"pair", ""}, {"n", "1000"}, {"iters", "100000"}, {"burnin", "0"}, {"grid", ""}, {"points", "10"},
        {"replicates", "3"}},
       {{"iters", "1000000"}, {"points", "50"}},
       run_product},
      {"jumplim", "Rescaled first component of the chain against the limiting jump process",
       {{"pair", ""}, {"n", "1000"}, {"k", "8"}, {"horizon", "1000"}, {"hstar", "1000"}, {"probes", "100"},
        {"probe_samples", "20000"}},
       {{"horizon", "10000"}},
       run_jumplim},
      {"sir", "SIR data augmentation with block updates of the infection times",
       {{"data", ""}, {"N", "120"}, {"alpha", "1"}, {"k", "sweep"}, {"iters", "100000"}, {"burnin", "1000"},
        {"thin", "10"}, {"alpha_scale", "0.2"}},
       {},
       run_sir},
      {"bdm", "Pseudo-marginal birth-death-mutation inference with latent block updates",
       {{"data", ""}, {"ntarget", "500"}, {"nlatent", "6000"}, {"k", "sweep"}, {"kv", "0"}, {"iters", "100000"},
        {"burnin", "10000"}, {"nrep", "25"}, {"sample", "100"}, {"scale_a", "0.03"}, {"scale_d", "0.03"},
        {"start_a", "0.5"}, {"start_d", "0.25"}, {"thin", "1"}},
       {{"ntarget", "10000"}, {"nlatent", "100000"}, {"iters", "1100000"}, {"burnin", "100000"}},
       run_bdm},
  };
}

std::string exit_code_footer(const std::string& name) {
  std::string specific;
  if (name == "theory") specific = "  2  missing --pair, malformed pair spec or 'points' < 1\n";
  if (name == "product") specific = "  2  missing --pair, malformed --grid or a grid value outside [1, n]\n";
  if (name == "jumplim") specific = "  2  missing --pair or k outside [1, n]\n";
  if (name == "sir")
    specific = "  2  missing --data, unreadable or malformed removal file, k outside [1, cases] or bad alpha\n";
  if (name == "bdm")
    specific = "  2  unreadable or malformed cluster file, ntarget below the sample size, k above nlatent\n";
  return "Exit codes:\n  0  success\n  1  runtime failure (numerical error, failed simulation)\n"
         "  2  usage error: unknown flag or config key, unparsable value\n" +
         specific;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Block independence samplers: optimal scaling theory and experiments", "indscale"};
  app.require_subcommand(1);

  const std::vector<Command> cmds = commands();
  struct Bound {
    const Command* cmd;
    CLI::App* sub;
    Values flags;
    std::map<std::string, CLI::Option*> options;
    std::string config;
  };
  std::vector<Bound> bound(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    Bound& b = bound[i];
    b.cmd = &cmds[i];
    b.sub = app.add_subcommand(cmds[i].name, cmds[i].help);
    b.sub->add_option("--config", b.config, "key = value file; flags override it");
    b.sub->footer(exit_code_footer(cmds[i].name));
    std::set<std::string> keys(kCommonKeys);
    for (const auto& [key, value] : cmds[i].desk) keys.insert(key);
    for (const auto& key : keys) {
      std::string help = "default " + (cmds[i].desk.count(key) ? cmds[i].desk.at(key) : std::string("(see below)"));
      if (key == "seed") help = "master seed (default 1)";
      if (key == "out") help = "output directory (default $INDSCALE_OUT_DIR or ./indscale_out)";
      if (key == "scale") help = "desk or paper (default desk)";
      if (key == "threads") help = "worker threads, 0 = all cores (default 1)";
      b.options[key] = b.sub->add_option("--" + key, b.flags[key], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (auto& b : bound) {
    if (!b.sub->parsed()) continue;
    try {
      Values given;
      if (!b.config.empty()) given = read_config(b.config, *b.cmd);
      for (const auto& [key, opt] : b.options)
        if (opt->count() > 0) given[key] = b.flags[key];

      Values common{{"seed", "1"}, {"scale", "desk"}, {"threads", "1"}, {"out", ""}};
      for (auto& [key, value] : common)
        if (given.count(key)) value = given.at(key);
      if (common["scale"] != "desk" && common["scale"] != "paper")
        throw UsageError("'scale' must be desk or paper, got '" + common["scale"] + "'");
      const bool paper = common["scale"] == "paper";

      Values values = b.cmd->desk;
      if (paper)
        for (const auto& [key, value] : b.cmd->paper) values[key] = value;
      for (const auto& [key, value] : given)
        if (!kCommonKeys.count(key)) values[key] = value;

      fs::path out_dir = common["out"];
      if (out_dir.empty()) {
        const char* env = std::getenv("INDSCALE_OUT_DIR");
        out_dir = env && *env ? fs::path(env) : fs::path("indscale_out");
      }
      Values seeds{{"seed", common["seed"]}, {"threads", common["threads"]}};
      Context ctx{b.cmd->name, values, out_dir, get_u64(seeds, "seed"), get_size(seeds, "threads"), paper, out};
      if (ctx.threads == 0) ctx.threads = default_threads();
      for (const auto& [key, value] : common) ctx.values[key] = key == "out" ? out_dir.string() : value;

      std::error_code ec;
      fs::create_directories(out_dir, ec);
      if (ec) throw DataError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
      b.cmd->run(ctx);
      write_manifest(ctx);
      return kExitOk;
    } catch (const UsageError& e) {
      err << "indscale " << b.cmd->name << ": " << e.what() << '\n';
      return kExitUsage;
    } catch (const DataError& e) {
      err << "indscale " << b.cmd->name << ": " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "indscale " << b.cmd->name << ": " << e.what() << '\n';
      return kExitRuntime;
    }
  }
  return kExitUsage;
}

}  // namespace indscale::cli
