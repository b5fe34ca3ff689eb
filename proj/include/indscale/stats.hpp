#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace indscale::stats {

double normal_cdf(double x);
double normal_quantile(double p);
/// log Phi(x), accurate far into the lower tail where Phi underflows.
double log_normal_cdf(double x);

/// Log density of Gamma(shape, rate) at x; -inf for x <= 0.
double log_gamma_pdf(double x, double shape, double rate);
double log_choose(double n, double k);

/// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);

/// Welford accumulator; reports the standard error of the mean.
class MeanAccumulator {
 public:
  void add(double x);
  /// Combines two accumulators (Chan et al. pairwise update).
  void merge(const MeanAccumulator& other);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;
  double std_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Standard error of the mean of a correlated sequence from non-overlapping
/// batch means. Falls back to the i.i.d. formula for short sequences.
double batch_means_se(std::span<const double> values, std::size_t batches = 50);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double effective_n = 0.0;
};

/// Asymptotic Kolmogorov p-value P(D > d) for sample size n.
double kolmogorov_p_value(double d, double n);

/// One-sample KS test of `sample` against `cdf`.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// KS test for a weighted empirical measure (e.g. occupation times). The
/// p-value uses the Kish effective sample size (sum w)^2 / sum w^2.
KsResult weighted_ks_test(std::span<const double> values, std::span<const double> weights,
                          const std::function<double(double)>& cdf);

}  // namespace indscale::stats
