#include "scimetric/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "scimetric/rng.hpp"

namespace scimetric {
namespace {

// log(1 + exp(eta)) without overflow.
double log1p_exp(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double logistic(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double log_likelihood(std::span<const double> x, std::span<const int> y, const Eigen::Vector2d& beta) {
  double ll = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double eta = beta(0) + beta(1) * x[k];
    ll += (y[k] ? eta : 0.0) - log1p_exp(eta);
  }
  return ll;
}

// Complete or quasi-complete separation of a single predictor.
bool separated(std::span<const double> x, std::span<const int> y) {
  double min1 = INFINITY, max1 = -INFINITY, min0 = INFINITY, max0 = -INFINITY;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (y[k]) {
      min1 = std::min(min1, x[k]);
      max1 = std::max(max1, x[k]);
    } else {
      min0 = std::min(min0, x[k]);
      max0 = std::max(max0, x[k]);
    }
  }
  return max0 <= min1 || max1 <= min0;
}

}  // namespace

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

LogisticFit fit_logistic(std::span<const double> x, std::span<const int> y, const LogisticOptions& options) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_logistic: x and y differ in length");
  std::size_t ones = 0;
  for (int v : y) ones += v != 0;
  if (ones == 0 || ones == y.size()) throw std::invalid_argument("fit_logistic: outcome has a single class");

  LogisticFit fit;
  fit.n = static_cast<int>(x.size());
  if (separated(x, y)) {
    fit.diagnostic = "complete or quasi-complete separation: the MLE does not exist";
    return fit;
  }

  const double base_rate = static_cast<double>(ones) / static_cast<double>(y.size());
  Eigen::Vector2d beta(std::log(base_rate / (1.0 - base_rate)), 0.0);
  double ll = log_likelihood(x, y, beta);
  Eigen::Matrix2d info;
  for (int it = 1; it <= options.max_iter; ++it) {
    Eigen::Vector2d score = Eigen::Vector2d::Zero();
    info.setZero();
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double mu = logistic(beta(0) + beta(1) * x[k]);
      const double w = mu * (1.0 - mu);
      const Eigen::Vector2d row(1.0, x[k]);
      score += row * ((y[k] ? 1.0 : 0.0) - mu);
      info += w * row * row.transpose();
    }
    const Eigen::LDLT<Eigen::Matrix2d> solver(info);
    if (solver.info() != Eigen::Success || !(solver.vectorD().minCoeff() > 0)) {
      fit.diagnostic = "singular information matrix";
      break;
    }
    Eigen::Vector2d step = solver.solve(score);
    double next_ll = log_likelihood(x, y, beta + step);
    for (int halvings = 0; next_ll < ll && halvings < 40; ++halvings) {
      step *= 0.5;
      next_ll = log_likelihood(x, y, beta + step);
    }
    beta += step;
    const double change = std::abs(next_ll - ll);
    ll = next_ll;
    fit.iterations = it;
    if (change < options.tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged && fit.diagnostic.empty()) fit.diagnostic = "iteration limit reached";

  // Standard errors from the observed information at the final estimate.
  info.setZero();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double mu = logistic(beta(0) + beta(1) * x[k]);
    const Eigen::Vector2d row(1.0, x[k]);
    info += mu * (1.0 - mu) * row * row.transpose();
  }
  const Eigen::Matrix2d cov = info.inverse();
  fit.intercept = beta(0);
  fit.slope = beta(1);
  fit.intercept_se = std::sqrt(cov(0, 0));
  fit.slope_se = std::sqrt(cov(1, 1));
  fit.intercept_p = normal_two_sided_p(fit.intercept / fit.intercept_se);
  fit.slope_p = normal_two_sided_p(fit.slope / fit.slope_se);
  fit.log_likelihood = ll;
  return fit;
}

double predict_probability(double intercept, double slope, double x) { return logistic(intercept + slope * x); }

double difference_of_means(std::span<const double> a, std::span<const double> b) {
  return sample_mean(a) - sample_mean(b);
}

double sample_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

PermutationResult permutation_test(std::span<const double> group_a, std::span<const double> group_b,
                                   int n_permutations, std::uint64_t seed, const GroupStatistic& statistic) {
  if (group_a.empty() || group_b.empty()) throw std::invalid_argument("permutation_test: empty group");
  if (n_permutations < 1) throw std::invalid_argument("permutation_test: need at least one permutation");
  const double observed = statistic(group_a, group_b);
  // Relative slack so that ties with the observed value survive rounding.
  const double threshold = std::abs(observed) * (1.0 - 1e-12);

  std::vector<double> pooled(group_a.begin(), group_a.end());
  pooled.insert(pooled.end(), group_b.begin(), group_b.end());
  const auto na = static_cast<std::ptrdiff_t>(group_a.size());

  std::vector<char> extreme(static_cast<std::size_t>(n_permutations));
  parallel_for(extreme.size(), [&](std::size_t r) {
    Engine rng = substream(seed, std::string_view("permutation"), r);
    std::vector<double> perm = pooled;
    std::shuffle(perm.begin(), perm.end(), rng);
    const double stat = statistic(std::span<const double>(perm.data(), static_cast<std::size_t>(na)),
                                  std::span<const double>(perm.data() + na, perm.size() - static_cast<std::size_t>(na)));
    extreme[r] = std::abs(stat) >= threshold;
  });
  std::size_t count = 0;
  for (char e : extreme) count += e != 0;
  return {observed, (1.0 + static_cast<double>(count)) / (n_permutations + 1.0), n_permutations};
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty input");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval bootstrap_ci(std::span<const double> values, int n_resamples, double level, std::uint64_t seed,
                      const SampleStatistic& statistic) {
  if (values.empty()) throw std::invalid_argument("bootstrap_ci: empty input");
  if (n_resamples < 1) throw std::invalid_argument("bootstrap_ci: need at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level must lie in (0, 1)");

  std::vector<double> stats(static_cast<std::size_t>(n_resamples));
  parallel_for(stats.size(), [&](std::size_t r) {
    Engine rng = substream(seed, std::string_view("bootstrap"), r);
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<double> sample(values.size());
    for (auto& s : sample) s = values[pick(rng)];
    stats[r] = statistic(sample);
  });
  std::sort(stats.begin(), stats.end());
  const double alpha = (1.0 - level) / 2.0;
  return {quantile_sorted(stats, alpha), quantile_sorted(stats, 1.0 - alpha)};
}

}  // namespace scimetric
