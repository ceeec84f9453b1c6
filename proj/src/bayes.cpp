#include "scimetric/bayes.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

#include "scimetric/stats.hpp"

namespace scimetric {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinEpsilon = 1e-8;
// log(sigma) support used by the slice steps; exp(700) is still finite.
constexpr double kLogSigmaLower = -50.0;
constexpr double kLogSigmaUpper = 700.0;

// Univariate slice sampler with stepping out and shrinkage (Neal, 2003),
// restricted to [lower, upper].
template <class LogDensity>
double slice_step(double x0, LogDensity&& log_density, double width, double lower, double upper, Engine& rng,
                  int max_steps = 64) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  const double level = log_density(x0) - expo(rng);
  double left = x0 - width * unif(rng);
  double right = left + width;
  int steps_left = static_cast<int>(std::floor(max_steps * unif(rng)));
  int steps_right = max_steps - 1 - steps_left;
  left = std::max(left, lower);
  right = std::min(right, upper);
  while (steps_left-- > 0 && left > lower && log_density(left) > level) left = std::max(left - width, lower);
  while (steps_right-- > 0 && right < upper && log_density(right) > level) right = std::min(right + width, upper);
  for (int guard = 0; guard < 256; ++guard) {
    const double x1 = left + unif(rng) * (right - left);
    if (log_density(x1) > level) return x1;
    (x1 < x0 ? left : right) = x1;
  }
  return x0;
}

Eigen::VectorXd standard_normal(Eigen::Index n, Engine& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

}  // namespace

void RegressionData::add(const std::string& researcher_id, double i, double p, double a) {
  const auto it = std::find(researchers.begin(), researchers.end(), researcher_id);
  int idx;
  if (it == researchers.end()) {
    idx = static_cast<int>(researchers.size());
    researchers.push_back(researcher_id);
  } else {
    idx = static_cast<int>(it - researchers.begin());
  }
  researcher.push_back(idx);
  I.push_back(i);
  P.push_back(p);
  A.push_back(a);
}

double HierarchicalModelSpec::mu_prior_sd() const {
  return dispersion_is_variance ? std::sqrt(mu_prior_dispersion) : mu_prior_dispersion;
}

void HierarchicalModelSpec::validate() const {
  if (chains < 1) throw std::invalid_argument("model spec: chains must be >= 1");
  if (burn_in < 0 || burn_in >= iterations) throw std::invalid_argument("model spec: need 0 <= burn_in < iterations");
  if (!(epsilon_upper > 0) || !(mu_prior_dispersion > 0) || !(sigma_shape > 0) || !(sigma_scale > 0))
    throw std::invalid_argument("model spec: prior parameters must be positive");
  if (individual_thin < 1) throw std::invalid_argument("model spec: individual_thin must be >= 1");
}

HierarchicalSampler::HierarchicalSampler(const RegressionData& data, const HierarchicalModelSpec& spec)
    : spec_(spec), k_(spec.include_age ? 3 : 2) {
  spec_.validate();
  const auto n_res = data.researchers.size();
  std::vector<std::vector<std::size_t>> rows(n_res);
  for (std::size_t r = 0; r < data.rows(); ++r) rows.at(static_cast<std::size_t>(data.researcher[r])).push_back(r);
  n_obs_ = data.rows();
  for (const auto& idx : rows) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), k_);
    Eigen::VectorXd y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t t = 0; t < idx.size(); ++t) {
      const auto row = static_cast<Eigen::Index>(t);
      x(row, 0) = 1.0;
      x(row, 1) = data.P[idx[t]];
      if (k_ == 3) x(row, 2) = data.A[idx[t]];
      y(row) = data.I[idx[t]];
    }
    xtx_.push_back(x.transpose() * x);
    xty_.push_back(x.transpose() * y);
    x_.push_back(std::move(x));
    y_.push_back(std::move(y));
  }
}

GibbsState HierarchicalSampler::initial_state(Engine& rng) const {
  std::normal_distribution<double> z(0.0, 1.0);
  const int j = researchers();
  GibbsState s;
  s.theta.resize(j, k_);
  for (int r = 0; r < j; ++r) {
    const Eigen::MatrixXd ridge = xtx_[r] + 1e-3 * Eigen::MatrixXd::Identity(k_, k_);
    s.theta.row(r) = ridge.ldlt().solve(xty_[r]).transpose();
  }
  s.mu.resize(k_);
  s.sigma.resize(k_);
  for (int k = 0; k < k_; ++k) {
    double mean = 0.0, sd = 1.0;
    if (j > 0) {
      mean = s.theta.col(k).mean();
      sd = j > 1 ? std::sqrt((s.theta.col(k).array() - mean).square().sum() / (j - 1)) : 1.0;
    }
    sd = std::max(sd, 0.05);
    for (int r = 0; r < j; ++r) s.theta(r, k) += 0.1 * sd * z(rng);
    s.mu(k) = mean + 0.1 * sd * z(rng);
    s.sigma(k) = sd * std::exp(0.2 * z(rng));
  }
  const double rss = residual_sum_of_squares(s);
  const double resid_sd = n_obs_ > 0 ? std::sqrt(rss / static_cast<double>(n_obs_)) : 1.0;
  s.epsilon = std::clamp(resid_sd * std::exp(0.2 * z(rng)), 1e-6, 0.5 * spec_.epsilon_upper);
  return s;
}

GaussianConditional HierarchicalSampler::coefficient_conditional(int researcher, const GibbsState& s) const {
  const double inv_eps2 = 1.0 / (s.epsilon * s.epsilon);
  const Eigen::VectorXd prior_prec = s.sigma.array().square().inverse();
  Eigen::MatrixXd precision = xtx_[researcher] * inv_eps2;
  precision.diagonal() += prior_prec;
  const Eigen::VectorXd rhs = xty_[researcher] * inv_eps2 + prior_prec.cwiseProduct(s.mu);
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  GaussianConditional g;
  g.mean = llt.solve(rhs);
  g.cov = llt.solve(Eigen::MatrixXd::Identity(k_, k_));
  return g;
}

void HierarchicalSampler::update_coefficients(GibbsState& s, Engine& rng) const {
  const double inv_eps2 = 1.0 / (s.epsilon * s.epsilon);
  const Eigen::VectorXd prior_prec = s.sigma.array().square().inverse();
  const Eigen::VectorXd prior_shift = prior_prec.cwiseProduct(s.mu);
  for (int r = 0; r < researchers(); ++r) {
    Eigen::MatrixXd precision = xtx_[r] * inv_eps2;
    precision.diagonal() += prior_prec;
    const Eigen::LLT<Eigen::MatrixXd> llt(precision);
    const Eigen::VectorXd mean = llt.solve(xty_[r] * inv_eps2 + prior_shift);
    // precision = L L^T, so L^{-T} z has covariance precision^{-1}.
    const Eigen::VectorXd noise = llt.matrixU().solve(standard_normal(k_, rng));
    s.theta.row(r) = (mean + noise).transpose();
  }
}

GaussianConditional HierarchicalSampler::group_mean_conditional(int k, const GibbsState& s) const {
  const double tau = spec_.mu_prior_sd();
  const double inv_var = 1.0 / (s.sigma(k) * s.sigma(k));
  const double precision = researchers() * inv_var + 1.0 / (tau * tau);
  GaussianConditional g;
  g.mean = Eigen::VectorXd::Constant(1, s.theta.col(k).sum() * inv_var / precision);
  g.cov = Eigen::MatrixXd::Constant(1, 1, 1.0 / precision);
  return g;
}

void HierarchicalSampler::update_group_means(GibbsState& s, Engine& rng) const {
  std::normal_distribution<double> z(0.0, 1.0);
  for (int k = 0; k < k_; ++k) {
    const auto g = group_mean_conditional(k, s);
    s.mu(k) = g.mean(0) + std::sqrt(g.cov(0, 0)) * z(rng);
  }
}

double HierarchicalSampler::log_scale_conditional(int k, double sigma, const GibbsState& s) const {
  if (!(sigma > 0.0)) return kNegInf;
  const double ss = (s.theta.col(k).array() - s.mu(k)).square().sum();
  const double a = spec_.sigma_shape + 1.0 + researchers();
  return -a * std::log(sigma) - spec_.sigma_scale / sigma - ss / (2.0 * sigma * sigma);
}

void HierarchicalSampler::update_group_scales(GibbsState& s, Engine& rng) const {
  for (int k = 0; k < k_; ++k) {
    const double ss = (s.theta.col(k).array() - s.mu(k)).square().sum();
    const double a = spec_.sigma_shape + researchers();
    const double b = spec_.sigma_scale;
    // Density of u = log(sigma), Jacobian included; log-concave in u.
    auto log_density = [&](double u) { return -a * u - b * std::exp(-u) - 0.5 * ss * std::exp(-2.0 * u); };
    const double u = slice_step(std::log(s.sigma(k)), log_density, 1.0, kLogSigmaLower, kLogSigmaUpper, rng);
    s.sigma(k) = std::exp(u);
  }
}

double HierarchicalSampler::residual_sum_of_squares(const GibbsState& s) const {
  double rss = 0.0;
  for (int r = 0; r < researchers(); ++r) rss += (y_[r] - x_[r] * s.theta.row(r).transpose()).squaredNorm();
  return rss;
}

double HierarchicalSampler::log_epsilon_conditional(double epsilon, const GibbsState& s) const {
  if (!(epsilon > 0.0) || epsilon > spec_.epsilon_upper) return kNegInf;
  const double rss = residual_sum_of_squares(s);
  return -static_cast<double>(n_obs_) * std::log(epsilon) - rss / (2.0 * epsilon * epsilon);
}

void HierarchicalSampler::update_epsilon(GibbsState& s, Engine& rng) const {
  const double rss = residual_sum_of_squares(s);
  const double n = static_cast<double>(n_obs_);
  auto log_density = [&](double u) { return -(n - 1.0) * u - 0.5 * rss * std::exp(-2.0 * u); };
  const double u = slice_step(std::log(s.epsilon), log_density, 1.0, std::log(kMinEpsilon),
                              std::log(spec_.epsilon_upper), rng);
  s.epsilon = std::exp(u);
}

void HierarchicalSampler::sweep(GibbsState& s, Engine& rng) const {
  update_coefficients(s, rng);
  update_group_means(s, rng);
  update_group_scales(s, rng);
  update_epsilon(s, rng);
}

int PosteriorSamples::group_index(const std::string& name) const {
  const auto it = std::find(group_names.begin(), group_names.end(), name);
  if (it == group_names.end()) throw std::out_of_range("unknown parameter " + name);
  return static_cast<int>(it - group_names.begin());
}

Eigen::MatrixXd PosteriorSamples::group_draws(const std::string& name) const {
  const int col = group_index(name);
  const auto n = chains.front().group.rows() - burn_in;
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(chains.size()));
  for (std::size_t c = 0; c < chains.size(); ++c)
    out.col(static_cast<Eigen::Index>(c)) = chains[c].group.col(col).tail(n);
  return out;
}

Eigen::MatrixXd PosteriorSamples::individual_draws(int researcher, int coefficient) const {
  const auto k = static_cast<int>(coefficient_names.size());
  const auto n = chains.front().individual.rows();
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(chains.size()));
  for (std::size_t c = 0; c < chains.size(); ++c)
    out.col(static_cast<Eigen::Index>(c)) = chains[c].individual.col(researcher * k + coefficient);
  return out;
}

PosteriorSamples fit_hierarchical(const RegressionData& data, const HierarchicalModelSpec& spec, std::uint64_t seed) {
  const HierarchicalSampler sampler(data, spec);
  const int k = sampler.coefficients();
  const int j = sampler.researchers();

  PosteriorSamples out;
  out.coefficient_names = {"c", "beta"};
  out.group_names = {"mu_c", "sigma_c", "mu_P", "sigma_P"};
  if (spec.include_age) {
    out.coefficient_names.push_back("gamma");
    out.group_names.push_back("mu_A");
    out.group_names.push_back("sigma_A");
  }
  out.group_names.push_back("epsilon");
  out.researchers = data.researchers;
  out.burn_in = spec.burn_in;
  out.individual_thin = spec.individual_thin;
  out.chains.resize(static_cast<std::size_t>(spec.chains));

  const int kept = spec.keep_individual ? (spec.iterations - spec.burn_in + spec.individual_thin - 1) / spec.individual_thin : 0;
  parallel_for(out.chains.size(), [&](std::size_t c) {
    Engine rng = substream(seed, std::string_view("mcmc-chain"), c);
    auto& draws = out.chains[c];
    draws.group.resize(spec.iterations, static_cast<Eigen::Index>(out.group_names.size()));
    draws.individual.resize(kept, static_cast<Eigen::Index>(j) * k);
    GibbsState state = sampler.initial_state(rng);
    int row = 0;
    for (int it = 0; it < spec.iterations; ++it) {
      sampler.sweep(state, rng);
      for (int q = 0; q < k; ++q) {
        draws.group(it, 2 * q) = state.mu(q);
        draws.group(it, 2 * q + 1) = state.sigma(q);
      }
      draws.group(it, 2 * k) = state.epsilon;
      const int post = it - spec.burn_in;
      if (kept > 0 && post >= 0 && post % spec.individual_thin == 0) {
        draws.individual.row(row++) = state.theta.reshaped<Eigen::RowMajor>().transpose();
      }
    }
  });
  return out;
}

Rhat split_rhat(const Eigen::MatrixXd& draws) {
  const Eigen::Index n = draws.rows() / 2;
  const Eigen::Index m = draws.cols() * 2;
  if (draws.cols() < 2 || n < 2) throw std::invalid_argument("split_rhat: need >= 2 chains and >= 4 draws");
  Eigen::VectorXd means(m), vars(m);
  for (Eigen::Index c = 0; c < draws.cols(); ++c) {
    for (int half = 0; half < 2; ++half) {
      const auto seg = draws.col(c).segment(half * (draws.rows() - n), n);
      const double mean = seg.mean();
      means(2 * c + half) = mean;
      vars(2 * c + half) = (seg.array() - mean).square().sum() / static_cast<double>(n - 1);
    }
  }
  const double w = vars.mean();
  if (!(w > 0.0)) return {std::numeric_limits<double>::quiet_NaN(), true};
  const double grand = means.mean();
  const double b = static_cast<double>(n) * (means.array() - grand).square().sum() / static_cast<double>(m - 1);
  const double nd = static_cast<double>(n);
  const double var_plus = (nd - 1.0) / nd * w + b / nd;
  return {std::sqrt(var_plus / w), false};
}

Rhat rhat(const PosteriorSamples& samples, const std::string& parameter) {
  return split_rhat(samples.group_draws(parameter));
}

double effective_sample_size(const Eigen::MatrixXd& draws) {
  const Eigen::Index n = draws.rows();
  const Eigen::Index m = draws.cols();
  const double total = static_cast<double>(n * m);
  if (n < 4) return total;
  const Eigen::VectorXd means = draws.colwise().mean().transpose();
  const Eigen::MatrixXd centered = draws.rowwise() - means.transpose();
  auto mean_acov = [&](Eigen::Index lag) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < m; ++c)
      acc += centered.col(c).head(n - lag).dot(centered.col(c).tail(n - lag)) / static_cast<double>(n);
    return acc / static_cast<double>(m);
  };
  const double acov0 = mean_acov(0);
  const double w = acov0 * static_cast<double>(n) / static_cast<double>(n - 1);
  double var_plus = acov0;
  if (m > 1) var_plus += (means.array() - means.mean()).square().sum() / static_cast<double>(m - 1);
  if (!(var_plus > 0.0)) return total;

  auto rho = [&](Eigen::Index lag) { return 1.0 - (w - mean_acov(lag)) / var_plus; };
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index lag = 0; lag + 1 < n; lag += 2) {
    double pair = rho(lag) + rho(lag + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau = std::max(tau, 1.0 / std::log10(total));
  return total / tau;
}

ParameterSummary summarize_draws(const std::string& name, const Eigen::MatrixXd& draws) {
  ParameterSummary s;
  s.name = name;
  std::vector<double> pooled(draws.data(), draws.data() + draws.size());
  const double n = static_cast<double>(pooled.size());
  s.mean = sample_mean(pooled);
  double ss = 0.0;
  for (double v : pooled) ss += (v - s.mean) * (v - s.mean);
  s.sd = pooled.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::sort(pooled.begin(), pooled.end());
  s.lo = quantile_sorted(pooled, 0.025);
  s.hi = quantile_sorted(pooled, 0.975);
  if (draws.cols() >= 2 && draws.rows() >= 4) {
    const auto r = split_rhat(draws);
    s.rhat = r.value;
    s.rhat_degenerate = r.degenerate;
  }
  s.ess = effective_sample_size(draws);
  s.mcse = s.sd / std::sqrt(s.ess);
  return s;
}

Density kernel_density(const Eigen::MatrixXd& draws, int points) {
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  const double mean = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / std::max(1.0, n - 1.0));
  const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  Density d;
  if (!(spread > 0.0)) {
    d.x = {v.front()};
    d.y = {1.0};
    return d;
  }
  const double bw = 0.9 * spread * std::pow(n, -0.2);
  const double lo = v.front() - 3.0 * bw, hi = v.back() + 3.0 * bw;
  const double norm = 1.0 / (n * bw * std::sqrt(2.0 * std::numbers::pi));
  for (int g = 0; g < points; ++g) {
    const double x = lo + (hi - lo) * g / (points - 1);
    // Only draws within 8 bandwidths contribute measurably.
    const auto first = std::lower_bound(v.begin(), v.end(), x - 8.0 * bw);
    const auto last = std::upper_bound(v.begin(), v.end(), x + 8.0 * bw);
    double acc = 0.0;
    for (auto it = first; it != last; ++it) {
      const double u = (x - *it) / bw;
      acc += std::exp(-0.5 * u * u);
    }
    d.x.push_back(x);
    d.y.push_back(acc * norm);
  }
  return d;
}

bool PosteriorSummary::converged(double threshold) const {
  for (const auto& p : group)
    if (p.rhat_degenerate || !(p.rhat < threshold)) return false;
  return true;
}

const ParameterSummary& PosteriorSummary::operator[](const std::string& name) const {
  for (const auto& p : group)
    if (p.name == name) return p;
  throw std::out_of_range("no summary for " + name);
}

PosteriorSummary posterior_summary(const PosteriorSamples& samples) {
  if (samples.chains.empty() || samples.chains.front().group.rows() <= samples.burn_in)
    throw std::invalid_argument("posterior_summary: no post-burn-in draws");
  PosteriorSummary out;
  for (const auto& name : samples.group_names) out.group.push_back(summarize_draws(name, samples.group_draws(name)));
  if (samples.chains.front().individual.rows() > 0) {
    for (std::size_t r = 0; r < samples.researchers.size(); ++r)
      for (std::size_t q = 0; q < samples.coefficient_names.size(); ++q)
        out.individual.push_back(summarize_draws(samples.researchers[r] + ":" + samples.coefficient_names[q],
                                                 samples.individual_draws(static_cast<int>(r), static_cast<int>(q))));
  }
  for (const char* name : {"mu_P", "mu_A"})
    if (std::find(samples.group_names.begin(), samples.group_names.end(), name) != samples.group_names.end())
      out.densities.emplace(name, kernel_density(samples.group_draws(name)));
  out.epsilon_near_zero = out["epsilon"].mean < 1e-6;
  return out;
}

BayesSelection select_bayes_sample(const std::vector<CareerYear>& years, double tau, const SelectionOptions& options) {
  std::map<std::pair<std::string, std::string>, std::vector<const CareerYear*>> careers;
  for (const auto& cy : years) careers[{cy.discipline, cy.researcher_id}].push_back(&cy);

  std::map<std::string, std::vector<const std::vector<const CareerYear*>*>> eligible;
  std::set<std::string> seen_disciplines;
  for (auto& [key, list] : careers) {
    seen_disciplines.insert(key.first);
    std::sort(list.begin(), list.end(), [](const CareerYear* a, const CareerYear* b) { return a->year < b->year; });
    std::vector<Sector> sectors;
    for (const auto* cy : list) sectors.push_back(classify_sector(cy->I, cy->P, tau));
    if (!categorize_researcher(sectors).non_outlier()) continue;
    if (list.back()->career_age <= options.min_career_length) continue;
    eligible[key.first].push_back(&list);
  }

  BayesSelection out;
  for (const auto& discipline : seen_disciplines) {
    const auto it = eligible.find(discipline);
    const std::size_t n = it == eligible.end() ? 0 : it->second.size();
    if (n < static_cast<std::size_t>(options.min_researchers)) {
      out.warnings.push_back("discipline " + discipline + " has " + std::to_string(n) +
                             " eligible researchers; skipped");
      continue;
    }
    RegressionData data;
    for (const auto* list : it->second)
      for (const auto* cy : *list)
        if (cy->career_age >= 1) data.add(cy->researcher_id, cy->I, cy->P, cy->career_age);
    out.disciplines.emplace(discipline, std::move(data));
  }
  return out;
}

}  // namespace scimetric
