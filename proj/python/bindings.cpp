#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "indscale/bdm.hpp"
#include "indscale/densities.hpp"
#include "indscale/diagnostics.hpp"
#include "indscale/io.hpp"
#include "indscale/product.hpp"
#include "indscale/sampler.hpp"
#include "indscale/scaling.hpp"
#include "indscale/sir.hpp"

namespace py = pybind11;
using namespace indscale;

namespace {

DensityPair pair_of(const std::string& spec) { return DensityPair::from_spec(PairSpec::parse(spec)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Block-size tuning for Metropolis independence samplers";
  m.attr("__version__") = "0.1.0";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  py::class_<DiscrepancyResult>(m, "DiscrepancyResult")
      .def_readonly("value", &DiscrepancyResult::value)
      .def_readonly("std_error", &DiscrepancyResult::std_error)
      .def_property_readonly("method", [](const DiscrepancyResult& r) { return std::string(to_string(r.method)); })
      .def("finite", &DiscrepancyResult::finite);

  py::class_<TuningRow>(m, "TuningRow")
      .def_readonly("k", &TuningRow::k)
      .def_readonly("acceptance", &TuningRow::acceptance)
      .def_readonly("mean_moved", &TuningRow::mean_moved)
      .def_readonly("normalized_efficiency", &TuningRow::normalized_efficiency)
      .def_readonly("mc_se", &TuningRow::mc_se)
      .def("__repr__", [](const TuningRow& r) {
        return "TuningRow(k=" + std::to_string(r.k) + ", acceptance=" + format_number(r.acceptance) + ")";
      });

  py::class_<TuningTable>(m, "TuningTable")
      .def_readonly("label", &TuningTable::label)
      .def_readonly("rows", &TuningTable::rows)
      .def_readonly("argmax", &TuningTable::argmax)
      .def("best", &TuningTable::best, py::return_value_policy::copy)
      .def("to_csv", [](const TuningTable& t) { return tuning_csv(t); });

  py::class_<ChainResult>(m, "ChainResult")
      .def_readonly("row", &ChainResult::row)
      .def_readonly("accepted", &ChainResult::accepted)
      .def_readonly("recorded", &ChainResult::recorded)
      .def_property_readonly("trace", [](const ChainResult& r) {
        return r.trace ? py::cast(r.trace->values) : py::object(py::none());
      });

  m.def(
      "discrepancy",
      [](const std::string& pair, std::uint64_t mc, std::uint64_t seed) { return discrepancy(pair_of(pair), mc, seed); },
      py::arg("pair"), py::arg("mc_samples") = 1'000'000, py::arg("seed") = 1,
      "Discrepancy I of a pair spec such as 'gaussian:1.2', 't:5' or 'uniform_eps:0.05'.");

  m.def(
      "mean_acceptance",
      [](const std::string& pair, std::size_t k, std::uint64_t mc, std::uint64_t seed) {
        const auto e = estimate_mean_acceptance(pair_of(pair), k, mc, seed);
        return py::make_tuple(e.value, e.std_error);
      },
      py::arg("pair"), py::arg("k"), py::arg("mc_samples") = 100'000, py::arg("seed") = 1,
      "Monte Carlo E[min(1, W_k)] as (value, std_error).");

  m.def("gaussian_acceptance_approx", &gaussian_acceptance_approx, py::arg("k"), py::arg("I"), py::arg("J"));
  m.def("optimal_k", &optimal_k, py::arg("I"), py::arg("n"));
  m.def("theoretical_efficiency", &theoretical_efficiency, py::arg("acceptance"));

  m.def("maximize_gaussian_efficiency", [] {
    const auto o = maximize_gaussian_efficiency();
    return py::dict(py::arg("scaled_block") = o.scaled_block, py::arg("acceptance") = o.acceptance,
                    py::arg("normalizer") = o.normalizer);
  });

  m.def(
      "uniform_case",
      [](double eps) {
        const auto u = uniform_case(eps);
        return py::dict(py::arg("k_opt") = u.k_opt, py::arg("acceptance") = u.acceptance);
      },
      py::arg("eps"));

  m.def(
      "run_chain",
      [](const std::string& pair, std::size_t n, std::size_t k, std::uint64_t iterations, std::uint64_t burn_in,
         std::uint64_t seed, std::uint64_t trace_thin) {
        ChainConfig c;
        c.n = n;
        c.k = k;
        c.iterations = iterations;
        c.burn_in = burn_in;
        c.seed = seed;
        c.trace_thin = trace_thin;
        py::gil_scoped_release release;
        return run_chain(pair_of(pair), c);
      },
      py::arg("pair"), py::arg("n"), py::arg("k"), py::arg("iterations"), py::arg("burn_in") = 0,
      py::arg("seed") = 1, py::arg("trace_thin") = 0);

  m.def(
      "product_sweep",
      [](const std::string& pair, std::size_t n, std::vector<std::size_t> k_grid, std::uint64_t iterations,
         std::size_t replicates, std::uint64_t seed, std::size_t threads) {
        ExperimentConfig c;
        c.pair = PairSpec::parse(pair);
        c.n = n;
        c.k_grid = std::move(k_grid);
        c.iterations = iterations;
        c.replicates = replicates;
        c.seed = seed;
        c.threads = threads;
        py::gil_scoped_release release;
        return run_sweep(c);
      },
      py::arg("pair"), py::arg("n") = 1000, py::arg("k_grid") = std::vector<std::size_t>{},
      py::arg("iterations") = 100'000, py::arg("replicates") = 3, py::arg("seed") = 1, py::arg("threads") = 1);

  m.def(
      "load_removal_times",
      [](const std::filesystem::path& path, std::size_t population) {
        return load_removal_times(path, population).removal_times;
      },
      py::arg("path"), py::arg("population"), "Sorted removal times from a one-value-per-line file.");

  m.def(
      "sir_sweep",
      [](std::vector<double> removal_times, std::size_t population, std::optional<double> alpha,
         std::vector<std::size_t> k_grid, std::uint64_t iterations, std::uint64_t seed) {
        const auto data = EpidemicData::from_times(std::move(removal_times), population);
        SirRunConfig c;
        c.mode = alpha ? AlphaMode::fixed : AlphaMode::unknown;
        c.alpha = alpha.value_or(1.0);
        c.iterations = iterations;
        c.seed = seed;
        c.trace_thin = 0;
        py::gil_scoped_release release;
        return run_sir_sweep(data, c, k_grid);
      },
      py::arg("removal_times"), py::arg("population"), py::arg("alpha"), py::arg("k_grid"),
      py::arg("iterations") = 100'000, py::arg("seed") = 1,
      "Infection-time block sweep; alpha=None estimates alpha as well.");

  m.def(
      "bdm_sweep",
      [](std::vector<std::pair<std::size_t, std::size_t>> clusters, std::size_t target_size, std::size_t n_latent,
         std::vector<std::size_t> k_grid, std::uint64_t iterations, std::uint64_t burn_in, std::uint64_t seed) {
        std::vector<ClusterData::Cluster> cs;
        for (auto [size, count] : clusters) cs.push_back({size, count});
        BdmModel model;
        model.data = ClusterData::from_clusters(std::move(cs));
        model.target_size = target_size;
        BdmRunConfig c;
        c.n_latent = n_latent;
        c.iterations = iterations;
        c.burn_in = burn_in;
        c.seed = seed;
        BdmSweep sweep;
        {
          py::gil_scoped_release release;
          sweep = run_bdm_sweep(model, c, k_grid);
        }
        std::vector<double> ess_a, ess_d;
        for (const auto& e : sweep.ess_a) ess_a.push_back(e.ess);
        for (const auto& e : sweep.ess_d) ess_d.push_back(e.ess);
        return py::make_tuple(sweep.table, ess_a, ess_d);
      },
      py::arg("clusters"), py::arg("target_size"), py::arg("n_latent"), py::arg("k_grid"),
      py::arg("iterations") = 100'000, py::arg("burn_in") = 10'000, py::arg("seed") = 1,
      "Latent block sweep for (size, count) cluster data; returns (table, ess_a, ess_d).");

  m.def(
      "effective_sample_size",
      [](std::vector<double> values) {
        const auto r = effective_sample_size(Trace{std::move(values), "x"});
        return py::make_tuple(r.ess, r.iact);
      },
      py::arg("values"), "Geyer initial-positive-sequence ESS as (ess, iact).");
}
