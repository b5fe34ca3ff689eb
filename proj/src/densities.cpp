#include "indscale/densities.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "indscale/stats.hpp"

namespace indscale {

namespace {

double parse_number(std::string_view text, std::string_view context) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw std::invalid_argument("bad numeric parameter '" + std::string(text) + "' in " +
                                std::string(context));
  return value;
}

std::string format_parameter(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

PairSpec PairSpec::parse(std::string_view text) {
  std::string_view name;
  std::string_view param;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    name = text.substr(0, colon);
    param = text.substr(colon + 1);
  } else if (const auto open = text.find('('); open != std::string_view::npos && text.back() == ')') {
    name = text.substr(0, open);
    param = text.substr(open + 1, text.size() - open - 2);
  } else {
    throw std::invalid_argument("pair spec '" + std::string(text) +
                                "' must look like gaussian:1.2, t:5 or uniform_eps:0.05");
  }
  PairSpec spec;
  if (name == "gaussian") {
    spec.family = Family::gaussian;
  } else if (name == "t") {
    spec.family = Family::student_t;
  } else if (name == "uniform_eps") {
    spec.family = Family::uniform_eps;
  } else {
    throw std::invalid_argument("unknown density family '" + std::string(name) + "'");
  }
  spec.parameter = parse_number(param, text);
  return spec;
}

std::string PairSpec::to_string() const {
  switch (family) {
    case Family::gaussian: return "gaussian:" + format_parameter(parameter);
    case Family::student_t: return "t:" + format_parameter(parameter);
    case Family::uniform_eps: return "uniform_eps:" + format_parameter(parameter);
  }
  return {};
}

DensityPair DensityPair::gaussian(double lambda) {
  if (!(lambda >= 1.0) || !std::isfinite(lambda))
    throw std::domain_error("gaussian pair: unbounded weight, lambda must be >= 1");
  PairSpec spec{PairSpec::Family::gaussian, lambda};
  return {family::Gaussian{lambda}, spec.to_string(), spec};
}

DensityPair DensityPair::student_t(int nu) {
  if (nu < 1) throw std::domain_error("t pair: nu must be >= 1");
  PairSpec spec{PairSpec::Family::student_t, static_cast<double>(nu)};
  return {family::StudentT{nu}, spec.to_string(), spec};
}

DensityPair DensityPair::uniform_eps(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps))
    throw std::domain_error("uniform pair: eps must be >= 0");
  PairSpec spec{PairSpec::Family::uniform_eps, eps};
  return {family::UniformEps{eps}, spec.to_string(), spec};
}

DensityPair DensityPair::from_spec(const PairSpec& spec) {
  switch (spec.family) {
    case PairSpec::Family::gaussian: return gaussian(spec.parameter);
    case PairSpec::Family::student_t: {
      const double nu = spec.parameter;
      if (nu != std::floor(nu)) throw std::invalid_argument("t pair: nu must be an integer");
      return student_t(static_cast<int>(nu));
    }
    case PairSpec::Family::uniform_eps: return uniform_eps(spec.parameter);
  }
  throw std::invalid_argument("unknown density family");
}

DensityPair DensityPair::custom(std::string label, std::function<double(double)> target_logpdf,
                                std::function<double(double)> proposal_logpdf,
                                std::function<double(Rng&)> target_sampler,
                                std::function<double(Rng&)> proposal_sampler,
                                std::function<double(double)> target_cdf) {
  if (!target_logpdf || !proposal_logpdf || !target_sampler || !proposal_sampler)
    throw std::invalid_argument("custom pair: all four functions are required");
  return {family::Custom{std::move(target_logpdf), std::move(proposal_logpdf),
                         std::move(target_sampler), std::move(proposal_sampler), std::move(target_cdf)},
          std::move(label), std::nullopt};
}

double DensityPair::log_weight(double x) const {
  const double g = visit([x](const auto& f) { return f.log_weight(x); });
  if (std::isnan(g) || g == std::numeric_limits<double>::infinity())
    throw std::domain_error("log_weight: non-finite log density at x = " + std::to_string(x) +
                            " for pair " + label_);
  return g;
}

bool DensityPair::identical() const {
  if (const auto* g = std::get_if<family::Gaussian>(&family_)) return g->lambda == 1.0;
  if (const auto* u = std::get_if<family::UniformEps>(&family_)) return u->eps == 0.0;
  return false;
}

std::string_view to_string(DiscrepancyMethod method) {
  switch (method) {
    case DiscrepancyMethod::closed_form: return "closed_form";
    case DiscrepancyMethod::monte_carlo: return "monte_carlo";
    case DiscrepancyMethod::divergent: return "divergent";
  }
  return "unknown";
}

DiscrepancyResult discrepancy_gaussian(double lambda) {
  if (!(lambda >= 1.0)) throw std::domain_error("discrepancy_gaussian: unbounded weight for lambda < 1");
  const double gap = lambda - 1.0 / lambda;
  return DiscrepancyResult::closed_form(0.5 * gap * gap);
}

DiscrepancyResult discrepancy_t(int nu, std::uint64_t mc_samples, std::uint64_t seed) {
  if (nu < 1) throw std::domain_error("discrepancy_t: nu must be >= 1");
  if (nu <= 2) return DiscrepancyResult::divergent();
  if (mc_samples < 10'000) throw std::invalid_argument("discrepancy_t: need at least 1e4 Monte Carlo samples");
  Rng rng = make_stream(seed, 0);
  const double dnu = nu;
  stats::MeanAccumulator acc;
  for (std::uint64_t i = 0; i < mc_samples; ++i) {
    const double x = std_normal(rng);
    const double y = student_t(rng, dnu);
    acc.add(std::log1p(x * x / dnu) - std::log1p(y * y / dnu));
  }
  const double scale = 0.5 * (dnu + 1.0);
  return DiscrepancyResult::monte_carlo(1.0 / (dnu - 2.0) + scale * acc.mean(), scale * acc.std_error());
}

DiscrepancyResult discrepancy_generic(const DensityPair& pair, std::uint64_t mc_samples, std::uint64_t seed) {
  if (mc_samples < 2) throw std::invalid_argument("discrepancy_generic: need at least 2 samples");
  Rng rng = make_stream(seed, 0);
  stats::MeanAccumulator acc;
  for (std::uint64_t i = 0; i < mc_samples; ++i) {
    const double gx = pair.log_weight(pair.sample_target(rng));
    const double gy = pair.log_weight(pair.sample_proposal(rng));
    if (std::isinf(gy) || std::isinf(gx)) return DiscrepancyResult::divergent();
    acc.add(gx - gy);
  }
  return DiscrepancyResult::monte_carlo(acc.mean(), acc.std_error());
}

DiscrepancyResult discrepancy(const DensityPair& pair, std::uint64_t mc_samples, std::uint64_t seed) {
  if (pair.identical()) return DiscrepancyResult::closed_form(0.0);
  if (const auto& spec = pair.spec()) {
    switch (spec->family) {
      case PairSpec::Family::gaussian: return discrepancy_gaussian(spec->parameter);
      case PairSpec::Family::student_t:
        return discrepancy_t(static_cast<int>(spec->parameter), mc_samples, seed);
      case PairSpec::Family::uniform_eps: return DiscrepancyResult::divergent();
    }
  }
  return discrepancy_generic(pair, mc_samples, seed);
}

WeightSummary summarize_weights(const DensityPair& pair, std::uint64_t mc_samples, std::uint64_t seed) {
  Rng rng = make_stream(seed, 1);
  stats::MeanAccumulator weight, gy_acc, gx_acc, diff;
  for (std::uint64_t i = 0; i < mc_samples; ++i) {
    const double gx = pair.log_weight(pair.sample_target(rng));
    const double gy = pair.log_weight(pair.sample_proposal(rng));
    weight.add(std::exp(gy));
    gy_acc.add(gy);
    gx_acc.add(gx);
    diff.add(gy - gx);
  }
  WeightSummary s;
  s.mean_weight_under_proposal = {weight.mean(), weight.std_error()};
  s.mean_log_weight_proposal = {gy_acc.mean(), gy_acc.std_error()};
  s.mean_log_weight_target = {gx_acc.mean(), gx_acc.std_error()};
  s.discrepancy = {-diff.mean(), diff.std_error()};
  s.j = diff.variance();
  return s;
}

}  // namespace indscale
