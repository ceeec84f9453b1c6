#pragma once

// Career-age aggregates: sliding-window trends, sector occupancy by career
// interval and the perfectionist-probability models.

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scimetric/normalize.hpp"
#include "scimetric/plane.hpp"
#include "scimetric/stats.hpp"

namespace scimetric {

enum class WindowAlignment {
  Centered,  // ages [a - w/2, a + w/2]
  Trailing,  // ages [a - w + 1, a]
};

struct TrendPoint {
  int age = 0;  // window center (or end, when trailing)
  double mean_P = 0.0, lo_P = 0.0, hi_P = 0.0;
  double mean_I = 0.0, lo_I = 0.0, hi_I = 0.0;
  int n = 0;
};

struct TrendOptions {
  int window = 5;
  WindowAlignment alignment = WindowAlignment::Centered;
  int n_resamples = 10000;
  double level = 0.95;
  int min_n = 1;
  std::uint64_t seed = 0;
};

// Per discipline, mean P and I over researcher-years with A >= 1 inside each
// window, with bootstrap percentile intervals. Windows are truncated at the
// observed age range.
std::map<std::string, std::vector<TrendPoint>> sliding_window_trends(const std::vector<CareerYear>& years,
                                                                     const TrendOptions& options = {});

struct OccupancyMatrix {
  // kSectorCount rows in Sector order; one column per retained interval.
  Eigen::MatrixXd fractions;
  std::vector<int> intervals;     // m: interval covers ages 5m+1 .. 5m+5
  std::vector<int> contributors;  // researchers per column
};

struct OccupancyOptions {
  int interval = 5;
  int min_researchers = 20;
};

// Column m is the mean, over researchers with a year of age in interval m, of
// each researcher's sector fractions within that interval.
std::map<std::string, OccupancyMatrix> occupancy_matrix(const std::vector<LabeledCareer>& careers,
                                                        const OccupancyOptions& options = {});

// Outcome of the perfectionist models: one row per outlier researcher.
struct OutlierOutcome {
  std::string researcher_id;
  std::string discipline;
  int career_length = 0;
  int productivity_outlier_years = 0;  // years with P > tau (Ppp or IPpp)
  bool perfectionist = false;          // >= 1 Ipp year
};

std::vector<OutlierOutcome> outlier_outcomes(const std::vector<LabeledCareer>& careers);

// Logistic fit of perfectionist status on career length L.
LogisticFit perfectionist_vs_length(const std::vector<OutlierOutcome>& outliers);

// Logistic fit of perfectionist status on the number of productivity-outlier years.
LogisticFit perfectionist_vs_outlier_years(const std::vector<OutlierOutcome>& outliers);

}  // namespace scimetric
