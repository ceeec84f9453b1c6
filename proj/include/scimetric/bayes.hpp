#pragma once

// Hierarchical linear model of journal prestige on productivity (and,
// optionally, career age):
//
//   I_jt ~ Normal(c_j + beta_j P_jt [+ gamma_j A_jt], epsilon)
//   c_j ~ Normal(mu_c, sigma_c), beta_j ~ Normal(mu_P, sigma_P), gamma_j ~ Normal(mu_A, sigma_A)
//   epsilon ~ Uniform(0, 100), mu_* ~ Normal(0, sqrt(1e5)), sigma_* ~ InvGamma(1e-3, 1)
//
// Normal(m, s) takes a standard deviation. Sampled with Gibbs steps for the
// conditionally Gaussian blocks and slice steps for sigma_* and epsilon.

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scimetric/normalize.hpp"
#include "scimetric/plane.hpp"
#include "scimetric/rng.hpp"

namespace scimetric {

struct RegressionData {
  std::vector<std::string> researchers;
  std::vector<int> researcher;  // row -> index into `researchers`
  std::vector<double> I, P, A;

  std::size_t rows() const noexcept { return I.size(); }
  // Appends a row, registering the researcher on first sight.
  void add(const std::string& researcher_id, double i, double p, double a);
};

struct HierarchicalModelSpec {
  bool include_age = false;
  double epsilon_upper = 100.0;
  double mu_prior_dispersion = 1e5;
  // true: mu prior SD = sqrt(dispersion); false: SD = dispersion.
  bool dispersion_is_variance = true;
  double sigma_shape = 1e-3;
  double sigma_scale = 1.0;
  int chains = 8;
  int iterations = 10000;
  int burn_in = 5000;
  // Per-researcher draws are stored after burn-in, every `individual_thin`-th.
  bool keep_individual = true;
  int individual_thin = 1;

  double mu_prior_sd() const;
  void validate() const;
};

struct GibbsState {
  Eigen::MatrixXd theta;  // researchers x coefficients (c, beta[, gamma])
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
  double epsilon = 1.0;
};

struct GaussianConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

class HierarchicalSampler {
 public:
  HierarchicalSampler(const RegressionData& data, const HierarchicalModelSpec& spec);

  int coefficients() const noexcept { return k_; }
  int researchers() const noexcept { return static_cast<int>(xtx_.size()); }
  std::size_t observations() const noexcept { return n_obs_; }

  // Per-researcher ridge least squares, jittered by `rng`.
  GibbsState initial_state(Engine& rng) const;

  void update_coefficients(GibbsState& s, Engine& rng) const;
  void update_group_means(GibbsState& s, Engine& rng) const;
  void update_group_scales(GibbsState& s, Engine& rng) const;
  void update_epsilon(GibbsState& s, Engine& rng) const;
  void sweep(GibbsState& s, Engine& rng) const;

  // Full conditionals, exposed for verification.
  GaussianConditional coefficient_conditional(int researcher, const GibbsState& s) const;
  GaussianConditional group_mean_conditional(int coefficient, const GibbsState& s) const;
  // Unnormalized log densities in sigma_k and epsilon (not their logs).
  double log_scale_conditional(int coefficient, double sigma, const GibbsState& s) const;
  double log_epsilon_conditional(double epsilon, const GibbsState& s) const;
  double residual_sum_of_squares(const GibbsState& s) const;

 private:
  HierarchicalModelSpec spec_;
  int k_;
  std::size_t n_obs_ = 0;
  std::vector<Eigen::MatrixXd> x_;
  std::vector<Eigen::VectorXd> y_;
  std::vector<Eigen::MatrixXd> xtx_;
  std::vector<Eigen::VectorXd> xty_;
};

struct ChainDraws {
  Eigen::MatrixXd group;       // iterations x group parameters, burn-in included
  Eigen::MatrixXd individual;  // kept draws x (researchers * coefficients), researcher-major
};

struct PosteriorSamples {
  std::vector<std::string> group_names;  // mu_c, sigma_c, mu_P, sigma_P, [mu_A, sigma_A], epsilon
  std::vector<std::string> coefficient_names;
  std::vector<std::string> researchers;
  int burn_in = 0;
  int individual_thin = 1;
  std::vector<ChainDraws> chains;

  int group_index(const std::string& name) const;
  // Post-burn-in draws of one group parameter, one column per chain.
  Eigen::MatrixXd group_draws(const std::string& name) const;
  // Per-researcher post-burn-in draws, one column per chain.
  Eigen::MatrixXd individual_draws(int researcher, int coefficient) const;
};

// Runs `spec.chains` independent chains; chain c uses substream (seed, c).
PosteriorSamples fit_hierarchical(const RegressionData& data, const HierarchicalModelSpec& spec, std::uint64_t seed);

struct Rhat {
  double value = 1.0;
  bool degenerate = false;  // zero within-chain variance
};

// Split-chain potential scale reduction over the columns (chains) of `draws`.
Rhat split_rhat(const Eigen::MatrixXd& draws);
Rhat rhat(const PosteriorSamples& samples, const std::string& parameter);

// Multi-chain effective sample size (Geyer initial monotone sequence).
double effective_sample_size(const Eigen::MatrixXd& draws);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double lo = 0.0;  // 2.5%
  double hi = 0.0;  // 97.5%
  double rhat = 1.0;
  bool rhat_degenerate = false;
  double ess = 0.0;
  double mcse = 0.0;
};

ParameterSummary summarize_draws(const std::string& name, const Eigen::MatrixXd& draws);

struct Density {
  std::vector<double> x;
  std::vector<double> y;
};

// Gaussian kernel density with Silverman's bandwidth.
Density kernel_density(const Eigen::MatrixXd& draws, int points = 256);

struct PosteriorSummary {
  std::vector<ParameterSummary> group;
  std::vector<ParameterSummary> individual;  // empty unless draws were kept
  std::map<std::string, Density> densities;  // mu_P and, with age, mu_A
  bool epsilon_near_zero = false;
  bool converged(double threshold = 1.1) const;
  const ParameterSummary& operator[](const std::string& name) const;
};

PosteriorSummary posterior_summary(const PosteriorSamples& samples);

struct BayesSelection {
  std::map<std::string, RegressionData> disciplines;
  std::vector<std::string> warnings;
};

struct SelectionOptions {
  int min_career_length = 5;  // strict: L > min_career_length
  int min_researchers = 2;
};

// Non-outlier researchers with L > 5, keeping their years with A >= 1.
BayesSelection select_bayes_sample(const std::vector<CareerYear>& years, double tau = kOutlierThreshold,
                                   const SelectionOptions& options = {});

}  // namespace scimetric
