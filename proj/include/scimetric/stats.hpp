#pragma once

// Logistic regression, permutation tests and bootstrap intervals.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace scimetric {

struct LogisticFit {
  double intercept = 0.0;
  double slope = 0.0;
  double intercept_se = 0.0;
  double slope_se = 0.0;
  double intercept_p = 1.0;  // two-sided Wald
  double slope_p = 1.0;
  double log_likelihood = 0.0;
  int iterations = 0;
  int n = 0;
  bool converged = false;
  std::string diagnostic;  // set when not converged
};

struct LogisticOptions {
  int max_iter = 100;
  double tol = 1e-10;  // on log-likelihood change
};

// Maximum-likelihood fit of Pr(y = 1 | x) = 1 / (1 + exp(-(b0 + b1 x))) by
// Newton/IRLS with step halving. Throws std::invalid_argument when only one
// class is present or the lengths differ. Separation leaves converged = false.
LogisticFit fit_logistic(std::span<const double> x, std::span<const int> y, const LogisticOptions& options = {});

double predict_probability(double intercept, double slope, double x);
inline double predict_probability(const LogisticFit& fit, double x) {
  return predict_probability(fit.intercept, fit.slope, x);
}

// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);

struct PermutationResult {
  double observed = 0.0;
  double p_value = 1.0;
  int n_permutations = 0;
};

using GroupStatistic = std::function<double(std::span<const double>, std::span<const double>)>;

double difference_of_means(std::span<const double> a, std::span<const double> b);

// p = (1 + #{|stat(permuted)| >= |stat(observed)|}) / (n_permutations + 1).
// Permutation r draws from substream (seed, r).
PermutationResult permutation_test(std::span<const double> group_a, std::span<const double> group_b,
                                   int n_permutations, std::uint64_t seed,
                                   const GroupStatistic& statistic = difference_of_means);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

using SampleStatistic = std::function<double(std::span<const double>)>;

double sample_mean(std::span<const double> v);

// Linear-interpolation quantile of sorted data (R type 7).
double quantile_sorted(std::span<const double> sorted, double q);

// Percentile bootstrap interval of `statistic` over with-replacement resamples.
Interval bootstrap_ci(std::span<const double> values, int n_resamples, double level, std::uint64_t seed,
                      const SampleStatistic& statistic = sample_mean);

}  // namespace scimetric
