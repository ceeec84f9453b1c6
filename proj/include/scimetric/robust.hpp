#pragma once

// Joint Huber (Proposal 2) estimation of location and scale.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace scimetric {

template <std::floating_point Scalar>
struct LocationScale {
  Scalar location{0};
  Scalar scale{0};
  bool converged{true};
  int iterations{0};
};

struct HuberOptions {
  double c = 1.5;
  double tol = 1e-8;
  int max_iter = 30;
};

// MAD of a standard normal; dividing by it makes the MAD consistent for sigma.
inline constexpr double kMadNormalizer = 0.67448975;

template <std::floating_point Scalar>
Scalar median(std::span<const Scalar> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sample");
  std::vector<Scalar> v(values.begin(), values.end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const Scalar upper = *mid;
  const Scalar lower = *std::max_element(v.begin(), mid);
  return (lower + upper) / Scalar(2);
}

template <std::floating_point Scalar>
Scalar normalized_mad(std::span<const Scalar> values, Scalar center) {
  std::vector<Scalar> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(),
                 [center](Scalar x) { return std::abs(x - center); });
  return median<Scalar>(dev) / Scalar(kMadNormalizer);
}

// kappa(c) = E[psi_c(Z)^2] for standard normal Z.
template <std::floating_point Scalar>
Scalar huber_consistency(Scalar c) {
  using std::erf;
  using std::exp;
  const Scalar inner = erf(c / std::numbers::sqrt2_v<Scalar>);  // 2 Phi(c) - 1
  const Scalar pdf = exp(-c * c / Scalar(2)) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
  return inner + c * c * (Scalar(1) - inner) - Scalar(2) * c * pdf;
}

// Solves sum psi_c((x - mu)/s) = 0 and sum psi_c((x - mu)/s)^2 = (n - 1) kappa(c)
// by the fixed-point scheme of statsmodels' `Huber`, started at the median and
// normalized MAD. On failure returns (median, normalized MAD) with
// converged = false.
template <std::floating_point Scalar>
LocationScale<Scalar> huber_location_scale(std::span<const Scalar> x, const HuberOptions& opt = {}) {
  if (x.empty()) throw std::invalid_argument("huber_location_scale: empty input");
  if (!(opt.c > 0) || !(opt.tol > 0)) throw std::invalid_argument("huber_location_scale: c and tol must be positive");

  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) return {*lo, Scalar(0), true, 0};

  const auto n = static_cast<Scalar>(x.size());
  const Scalar c = static_cast<Scalar>(opt.c);
  const Scalar tol = static_cast<Scalar>(opt.tol);
  const Scalar kappa = huber_consistency(c);

  const Scalar med = median(x);
  const Scalar mad = normalized_mad(x, med);
  Scalar mu = med;
  Scalar s = mad;
  if (s == Scalar(0)) {
    Scalar mean_abs = 0;
    for (Scalar v : x) mean_abs += std::abs(v - med);
    s = mean_abs / n * std::sqrt(std::numbers::pi_v<Scalar> / Scalar(2));
  }

  for (int it = 1; it <= opt.max_iter; ++it) {
    const Scalar lower = mu - c * s;
    const Scalar upper = mu + c * s;
    Scalar clipped_sum = 0;
    for (Scalar v : x) clipped_sum += std::clamp(v, lower, upper);
    const Scalar new_mu = clipped_sum / n;

    Scalar inlier_ss = 0;
    Scalar inliers = 0;
    for (Scalar v : x) {
      if (std::abs(v - mu) <= c * s) {
        inlier_ss += (v - new_mu) * (v - new_mu);
        inliers += 1;
      }
    }
    const Scalar denom = (n - 1) * kappa - (n - inliers) * c * c;
    if (!(denom > 0) || !(inlier_ss > 0)) break;
    const Scalar new_s = std::sqrt(inlier_ss / denom);

    if (std::abs(s - new_s) <= new_s * tol && std::abs(mu - new_mu) <= new_s * tol)
      return {new_mu, new_s, true, it};
    mu = new_mu;
    s = new_s;
  }
  return {med, mad, false, opt.max_iter};
}

template <std::floating_point Scalar>
LocationScale<Scalar> huber_location_scale(const std::vector<Scalar>& x, const HuberOptions& opt = {}) {
  return huber_location_scale(std::span<const Scalar>(x), opt);
}

template <class Derived>
auto huber_location_scale(const Eigen::DenseBase<Derived>& x, const HuberOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  std::vector<Scalar> v(static_cast<std::size_t>(x.size()));
  Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(v.data(), x.size()) = x.derived().reshaped();
  return huber_location_scale(std::span<const Scalar>(v), opt);
}

// Plain moments (mean, n-1 SD) with the same result type, for sensitivity runs.
template <std::floating_point Scalar>
LocationScale<Scalar> moment_location_scale(std::span<const Scalar> x) {
  if (x.empty()) throw std::invalid_argument("moment_location_scale: empty input");
  Scalar mean = 0;
  for (Scalar v : x) mean += v;
  mean /= static_cast<Scalar>(x.size());
  if (x.size() == 1) return {mean, Scalar(0), true, 0};
  Scalar ss = 0;
  for (Scalar v : x) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<Scalar>(x.size() - 1)), true, 0};
}

}  // namespace scimetric
