#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "indscale/rng.hpp"
#include "indscale/stats.hpp"

namespace indscale {

// Target f and independence proposal q on the real line, with the weight
// omega(x) = f(x) / q(x) and its log g(x) = log f(x) - log q(x).
//
// Every built-in family has sup omega < inf, certified from the closed forms:
//   gaussian(lambda):  f = N(0,1),  q = N(0, lambda^2),  needs lambda >= 1
//   t(nu):             f = N(0,1),  q = t_nu,           any nu >= 1
//   uniform_eps(eps):  f = U(0,1),  q = U(0, 1 + eps),  any eps >= 0

namespace family {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

struct Gaussian {
  double lambda;
  double log_lambda;
  double weight_quad;  // (1 - 1/lambda^2) / 2

  explicit Gaussian(double lambda_)
      : lambda(lambda_),
        log_lambda(std::log(lambda_)),
        weight_quad(0.5 * (1.0 - 1.0 / (lambda_ * lambda_))) {}

  double target_logpdf(double x) const { return -0.5 * x * x - kHalfLog2Pi; }
  double proposal_logpdf(double x) const {
    return -0.5 * x * x / (lambda * lambda) - log_lambda - kHalfLog2Pi;
  }
  double log_weight(double x) const { return log_lambda - weight_quad * x * x; }
  double target_cdf(double x) const { return stats::normal_cdf(x); }
  double sample_target(Rng& rng) const { return std_normal(rng); }
  double sample_proposal(Rng& rng) const { return lambda * std_normal(rng); }
};

struct StudentT {
  int nu;
  double log_norm;  // log of the t_nu normalizing constant

  explicit StudentT(int nu_)
      : nu(nu_),
        log_norm(std::lgamma(0.5 * (nu_ + 1)) - std::lgamma(0.5 * nu_) -
                 0.5 * std::log(nu_ * std::numbers::pi)) {}

  double target_logpdf(double x) const { return -0.5 * x * x - kHalfLog2Pi; }
  double proposal_logpdf(double x) const {
    return log_norm - 0.5 * (nu + 1) * std::log1p(x * x / nu);
  }
  double log_weight(double x) const { return target_logpdf(x) - proposal_logpdf(x); }
  double target_cdf(double x) const { return stats::normal_cdf(x); }
  double sample_target(Rng& rng) const { return std_normal(rng); }
  double sample_proposal(Rng& rng) const { return student_t(rng, nu); }
};

struct UniformEps {
  double eps;

  double target_logpdf(double x) const {
    return (x > 0.0 && x < 1.0) ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  double proposal_logpdf(double x) const {
    return (x > 0.0 && x < 1.0 + eps) ? -std::log1p(eps)
                                      : -std::numeric_limits<double>::infinity();
  }
  double log_weight(double x) const {
    if (x > 0.0 && x < 1.0) return std::log1p(eps);
    if (x >= 1.0 && x < 1.0 + eps) return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();  // outside the proposal support
  }
  double target_cdf(double x) const { return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : x); }
  double sample_target(Rng& rng) const { return uniform01(rng); }
  double sample_proposal(Rng& rng) const { return (1.0 + eps) * uniform01(rng); }
};

/// User-supplied pair. The caller is responsible for sup omega < inf.
struct Custom {
  std::function<double(double)> target;
  std::function<double(double)> proposal;
  std::function<double(Rng&)> target_sampler;
  std::function<double(Rng&)> proposal_sampler;
  std::function<double(double)> cdf;  // optional

  double target_logpdf(double x) const { return target(x); }
  double proposal_logpdf(double x) const { return proposal(x); }
  double log_weight(double x) const { return target(x) - proposal(x); }
  double target_cdf(double x) const {
    if (!cdf) throw std::logic_error("custom pair has no target cdf");
    return cdf(x);
  }
  double sample_target(Rng& rng) const { return target_sampler(rng); }
  double sample_proposal(Rng& rng) const { return proposal_sampler(rng); }
};

}  // namespace family

/// Name plus parameter of a built-in family, as written in configs:
/// `gaussian:1.2`, `t:5`, `uniform_eps:0.05` (the `gaussian(1.2)` spelling is
/// accepted too).
struct PairSpec {
  enum class Family { gaussian, student_t, uniform_eps };
  Family family = Family::gaussian;
  double parameter = 1.0;

  static PairSpec parse(std::string_view text);
  std::string to_string() const;
};

class DensityPair {
 public:
  static DensityPair gaussian(double lambda);
  static DensityPair student_t(int nu);
  static DensityPair uniform_eps(double eps);
  static DensityPair from_spec(const PairSpec& spec);
  static DensityPair custom(std::string label, std::function<double(double)> target_logpdf,
                            std::function<double(double)> proposal_logpdf,
                            std::function<double(Rng&)> target_sampler,
                            std::function<double(Rng&)> proposal_sampler,
                            std::function<double(double)> target_cdf = {});

  /// Dispatches `fn` on the concrete family so hot loops are compiled once per
  /// family rather than paying for an indirect call per component.
  template <class Fn>
  decltype(auto) visit(Fn&& fn) const {
    return std::visit(std::forward<Fn>(fn), family_);
  }

  double target_logpdf(double x) const {
    return visit([x](const auto& f) { return f.target_logpdf(x); });
  }
  double proposal_logpdf(double x) const {
    return visit([x](const auto& f) { return f.proposal_logpdf(x); });
  }
  double target_cdf(double x) const {
    return visit([x](const auto& f) { return f.target_cdf(x); });
  }
  double sample_target(Rng& rng) const {
    return visit([&rng](const auto& f) { return f.sample_target(rng); });
  }
  double sample_proposal(Rng& rng) const {
    return visit([&rng](const auto& f) { return f.sample_proposal(rng); });
  }

  /// g(x) = log f(x) - log q(x). May be -inf where f vanishes inside the
  /// support of q; throws std::domain_error on NaN (x outside the support of q
  /// or a broken log density).
  double log_weight(double x) const;

  const std::string& label() const { return label_; }
  const std::optional<PairSpec>& spec() const { return spec_; }
  /// True when f and q are the same density, so omega is identically 1.
  bool identical() const;

 private:
  using Family = std::variant<family::Gaussian, family::StudentT, family::UniformEps, family::Custom>;
  DensityPair(Family family, std::string label, std::optional<PairSpec> spec)
      : family_(std::move(family)), label_(std::move(label)), spec_(std::move(spec)) {}

  Family family_;
  std::string label_;
  std::optional<PairSpec> spec_;
};

enum class DiscrepancyMethod { closed_form, monte_carlo, divergent };

/// I = D(q || f) + D(f || q).
struct DiscrepancyResult {
  double value = 0.0;
  double std_error = 0.0;
  DiscrepancyMethod method = DiscrepancyMethod::closed_form;

  static DiscrepancyResult closed_form(double value) { return {value, 0.0, DiscrepancyMethod::closed_form}; }
  static DiscrepancyResult monte_carlo(double value, double se) {
    return {value, se, DiscrepancyMethod::monte_carlo};
  }
  static DiscrepancyResult divergent() {
    return {std::numeric_limits<double>::infinity(), 0.0, DiscrepancyMethod::divergent};
  }
  bool finite() const { return method != DiscrepancyMethod::divergent; }
};

std::string_view to_string(DiscrepancyMethod method);

/// I = (lambda - 1/lambda)^2 / 2. Throws std::domain_error for lambda < 1.
DiscrepancyResult discrepancy_gaussian(double lambda);

/// Divergent for nu in {1, 2}. For nu >= 3, Monte Carlo estimate of
///   I = 1/(nu - 2) + (nu + 1)/2 * (E log(1 + X^2/nu) - E log(1 + Y^2/nu))
/// from paired draws X ~ N(0,1), Y ~ t_nu; needs mc_samples >= 1e4.
DiscrepancyResult discrepancy_t(int nu, std::uint64_t mc_samples, std::uint64_t seed);

/// Monte Carlo of E[g(X)] - E[g(Y)], X ~ f, Y ~ q. Reports divergent when a
/// proposal draw lands where f = 0.
DiscrepancyResult discrepancy_generic(const DensityPair& pair, std::uint64_t mc_samples,
                                      std::uint64_t seed);

/// Best available I for a pair: closed form when one exists, otherwise
/// Monte Carlo with the given budget.
DiscrepancyResult discrepancy(const DensityPair& pair, std::uint64_t mc_samples, std::uint64_t seed);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Moments of the weight function under both densities.
struct WeightSummary {
  Estimate mean_weight_under_proposal;  // E[omega(Y)], equals 1
  Estimate mean_log_weight_proposal;    // E[g(Y)] = -D(q || f)
  Estimate mean_log_weight_target;      // E[g(X)] = D(f || q)
  Estimate discrepancy;                 // I
  double j = 0.0;                       // var(g(Y) - g(X))
};

WeightSummary summarize_weights(const DensityPair& pair, std::uint64_t mc_samples, std::uint64_t seed);

}  // namespace indscale
