#pragma once

// Toy data and grid-integration oracles for the hierarchical sampler.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "scimetric/bayes.hpp"

namespace testsupport {

using scimetric::GibbsState;
using scimetric::RegressionData;

inline RegressionData toy_data() {
  RegressionData d;
  const double rows[][3] = {{0.3, -1.0, 1}, {0.1, 0.2, 2}, {-0.4, 1.1, 3}, {0.5, -0.3, 4},
                            {1.2, 0.5, 1},  {0.9, 1.5, 2}, {1.6, -0.8, 3}, {1.0, 0.1, 4},
                            {-0.7, 0.0, 1}, {-1.1, 2.0, 2}, {-0.2, -1.4, 3}, {-0.9, 0.7, 4}};
  const char* ids[] = {"a", "b", "c"};
  for (int k = 0; k < 12; ++k) d.add(ids[k / 4], rows[k][0], rows[k][1], rows[k][2]);
  return d;
}

inline GibbsState toy_state() {
  GibbsState s;
  s.theta.resize(3, 2);
  s.theta << 0.1, -0.2, 1.0, 0.1, -0.7, -0.3;
  s.mu = Eigen::Vector2d(0.2, -0.1);
  s.sigma = Eigen::Vector2d(0.8, 0.3);
  s.epsilon = 0.6;
  return s;
}

inline double log_normal_pdf(double x, double m, double s) { return -std::log(s) - 0.5 * (x - m) * (x - m) / (s * s); }

struct Moments2 {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
};

// Brute-force normalized moments of exp(logf) on a rectangular grid.
inline Moments2 grid_moments(const std::function<double(double, double)>& logf, Eigen::Vector2d lo, Eigen::Vector2d hi,
                      int n) {
  std::vector<double> lw;
  double top = -INFINITY;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double v = logf(lo(0) + (hi(0) - lo(0)) * (a + 0.5) / n, lo(1) + (hi(1) - lo(1)) * (b + 0.5) / n);
      lw.push_back(v);
      top = std::max(top, v);
    }
  Moments2 m;
  double z = 0.0;
  Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double w = std::exp(lw[static_cast<std::size_t>(a * n + b)] - top);
      const Eigen::Vector2d x(lo(0) + (hi(0) - lo(0)) * (a + 0.5) / n, lo(1) + (hi(1) - lo(1)) * (b + 0.5) / n);
      z += w;
      m.mean += w * x;
      second += w * x * x.transpose();
    }
  m.mean /= z;
  m.cov = second / z - m.mean * m.mean.transpose();
  return m;
}

// Normalized mean and SD of exp(logf) on (lo, hi) by the midpoint rule.
inline std::pair<double, double> grid_moments_1d(const std::function<double(double)>& logf, double lo, double hi, int n) {
  std::vector<double> lw(static_cast<std::size_t>(n));
  double top = -INFINITY;
  for (int k = 0; k < n; ++k) top = std::max(top, lw[static_cast<std::size_t>(k)] = logf(lo + (hi - lo) * (k + 0.5) / n));
  double z = 0.0, s1 = 0.0, s2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = lo + (hi - lo) * (k + 0.5) / n, w = std::exp(lw[static_cast<std::size_t>(k)] - top);
    z += w;
    s1 += w * x;
    s2 += w * x * x;
  }
  const double m = s1 / z;
  return {m, std::sqrt(s2 / z - m * m)};
}

}  // namespace testsupport
