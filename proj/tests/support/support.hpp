#pragma once

// Generators and independent oracles shared by the unit and acceptance tests.
// Oracles deliberately avoid the library's own numerical routines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "scimetric/plane.hpp"

namespace testsupport {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  double normal(double m = 0.0, double s = 1.0) { return std::normal_distribution<double>(m, s)(rng_); }
  double lognormal(double m, double s) { return std::lognormal_distribution<double>(m, s)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  bool coin(double p = 0.5) { return uniform() < p; }
  std::mt19937_64& engine() { return rng_; }

  // Normal bulk with a fraction of gross outliers on one side.
  std::vector<double> contaminated(int n, double fraction) {
    std::vector<double> x(static_cast<std::size_t>(n));
    const double loc = normal(0.0, 5.0), scale = uniform(0.5, 3.0);
    for (auto& v : x) v = coin(fraction) ? loc + scale * normal(8.0, 4.0) : loc + scale * normal();
    return x;
  }

  scimetric::Sector sector() { return static_cast<scimetric::Sector>(integer(0, scimetric::kSectorCount - 1)); }

  // Career with increasing calendar years and occasional gaps.
  scimetric::LabeledCareer career(int length, double gap_rate = 0.2) {
    scimetric::LabeledCareer c;
    c.researcher_id = "r" + std::to_string(integer(0, 1 << 30));
    c.discipline = "d";
    int y = integer(1990, 2000);
    for (int t = 0; t < length; ++t) {
      c.years.push_back(y);
      c.ages.push_back(y - 1990);
      c.sectors.push_back(sector());
      y += coin(gap_rate) ? integer(2, 4) : 1;
    }
    c.career_length = c.ages.empty() ? 0 : c.ages.back();
    return c;
  }

 private:
  std::mt19937_64 rng_;
};

// E[psi_c(Z)^2] by composite Simpson integration of the normal density,
// split at the kinks +-c so each piece is smooth.
inline double huber_kappa_by_quadrature(double c) {
  auto f = [c](double z) {
    const double psi = std::clamp(z, -c, c);
    return psi * psi * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  };
  auto simpson = [&f](double a, double b) {
    const int n = 20000;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
  };
  return simpson(-12.0, -c) + simpson(-c, c) + simpson(c, 12.0);
}

struct HuberRoot {
  double location = 0.0;
  double scale = 0.0;
  bool found = false;
};

// Solves the Proposal 2 estimating equations by nested bisection:
// inner sum psi((x - mu)/s) = 0 in mu, outer sum min(r^2, c^2) = (n - 1) kappa in s.
inline HuberRoot huber_oracle(const std::vector<double>& x, double c) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it, range = hi - lo;
  if (range == 0.0) return {lo, 0.0, true};
  const double kappa = huber_kappa_by_quadrature(c);
  const double n = static_cast<double>(x.size());

  auto mu_of = [&](double s) {
    double a = lo, b = hi;
    for (int it = 0; it < 100; ++it) {
      const double m = 0.5 * (a + b);
      double f = 0.0;
      for (double v : x) f += std::clamp((v - m) / s, -c, c);
      (f > 0.0 ? a : b) = m;
    }
    return 0.5 * (a + b);
  };
  auto g = [&](double s) {
    const double mu = mu_of(s);
    double t = 0.0;
    for (double v : x) t += std::min(((v - mu) / s) * ((v - mu) / s), c * c);
    return t - (n - 1.0) * kappa;
  };

  double a = 1e-9 * range, b = 1e3 * range;
  if (!(g(a) > 0.0 && g(b) < 0.0)) return {0.0, 0.0, false};
  for (int it = 0; it < 80; ++it) {
    const double m = std::sqrt(a * b);
    (g(m) > 0.0 ? a : b) = m;
  }
  const double s = std::sqrt(a * b);
  return {mu_of(s), s, true};
}

// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
inline double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
    d = std::max({d, std::abs((k + 1) / n - u[k]), std::abs(u[k] - k / n)});
  return d;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return v.size() < 2 ? 0.0 : std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace testsupport
