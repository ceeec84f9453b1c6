#include "scimetric/career.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "scimetric/rng.hpp"

namespace scimetric {

std::map<std::string, std::vector<TrendPoint>> sliding_window_trends(const std::vector<CareerYear>& years,
                                                                     const TrendOptions& options) {
  if (options.window < 1) throw std::invalid_argument("sliding_window_trends: window must be >= 1");
  // discipline -> age -> (P values, I values), in input-independent order.
  std::map<std::string, std::map<int, std::vector<std::pair<double, double>>>> by_age;
  for (const auto& cy : years)
    if (cy.career_age >= 1) by_age[cy.discipline][cy.career_age].emplace_back(cy.P, cy.I);

  const int before = options.alignment == WindowAlignment::Centered ? options.window / 2 : options.window - 1;
  const int after = options.alignment == WindowAlignment::Centered ? options.window - 1 - before : 0;

  std::map<std::string, std::vector<TrendPoint>> out;
  for (auto& [discipline, ages] : by_age) {
    for (auto& [age, values] : ages) std::sort(values.begin(), values.end());
    const int max_age = ages.rbegin()->first;
    auto& series = out[discipline];
    for (int center = 1; center <= max_age; ++center) {
      std::vector<double> p, i;
      for (auto it = ages.lower_bound(center - before); it != ages.end() && it->first <= center + after; ++it) {
        for (const auto& [pv, iv] : it->second) {
          p.push_back(pv);
          i.push_back(iv);
        }
      }
      if (p.empty() || static_cast<int>(p.size()) < options.min_n) continue;
      TrendPoint pt;
      pt.age = center;
      pt.n = static_cast<int>(p.size());
      pt.mean_P = sample_mean(p);
      pt.mean_I = sample_mean(i);
      const auto ci_p = bootstrap_ci(p, options.n_resamples, options.level,
                                     substream_seed(options.seed, std::string_view("trend-P"), discipline, center));
      const auto ci_i = bootstrap_ci(i, options.n_resamples, options.level,
                                     substream_seed(options.seed, std::string_view("trend-I"), discipline, center));
      // Percentile bounds can miss the plug-in mean by rounding on flat data.
      pt.lo_P = std::min(ci_p.lo, pt.mean_P);
      pt.hi_P = std::max(ci_p.hi, pt.mean_P);
      pt.lo_I = std::min(ci_i.lo, pt.mean_I);
      pt.hi_I = std::max(ci_i.hi, pt.mean_I);
      series.push_back(pt);
    }
  }
  return out;
}

std::map<std::string, OccupancyMatrix> occupancy_matrix(const std::vector<LabeledCareer>& careers,
                                                        const OccupancyOptions& options) {
  if (options.interval < 1) throw std::invalid_argument("occupancy_matrix: interval must be >= 1");
  struct Column {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(kSectorCount);
    int contributors = 0;
  };
  std::map<std::string, std::map<int, Column>> acc;
  for (const auto& c : careers) {
    std::map<int, Eigen::VectorXd> counts;
    for (std::size_t t = 0; t < c.sectors.size(); ++t) {
      if (c.ages[t] < 1) continue;
      const int m = (c.ages[t] - 1) / options.interval;
      auto [it, inserted] = counts.try_emplace(m, Eigen::VectorXd::Zero(kSectorCount));
      it->second(static_cast<Eigen::Index>(index(c.sectors[t]))) += 1.0;
    }
    auto& disc = acc[c.discipline];
    for (const auto& [m, v] : counts) {
      auto& col = disc[m];
      col.sum += v / v.sum();
      ++col.contributors;
    }
  }

  std::map<std::string, OccupancyMatrix> out;
  for (const auto& [discipline, columns] : acc) {
    OccupancyMatrix om;
    std::vector<Eigen::VectorXd> kept;
    for (const auto& [m, col] : columns) {
      if (col.contributors < options.min_researchers) continue;
      om.intervals.push_back(m);
      om.contributors.push_back(col.contributors);
      kept.push_back(col.sum / col.contributors);
    }
    om.fractions.resize(kSectorCount, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) om.fractions.col(static_cast<Eigen::Index>(k)) = kept[k];
    out.emplace(discipline, std::move(om));
  }
  return out;
}

std::vector<OutlierOutcome> outlier_outcomes(const std::vector<LabeledCareer>& careers) {
  std::vector<OutlierOutcome> out;
  for (const auto& c : careers) {
    const auto cat = categorize_researcher(c.sectors);
    if (cat.non_outlier()) continue;
    const auto prod_years =
        std::count_if(c.sectors.begin(), c.sectors.end(), [](Sector s) { return s == Sector::Ppp || s == Sector::IPpp; });
    out.push_back({c.researcher_id, c.discipline, c.career_length, static_cast<int>(prod_years), cat.perfectionist});
  }
  return out;
}

namespace {
template <class Field>
LogisticFit fit_outcomes(const std::vector<OutlierOutcome>& outliers, Field field) {
  if (outliers.size() < 2) throw std::invalid_argument("perfectionist model: need at least two outlier researchers");
  std::vector<double> x;
  std::vector<int> y;
  for (const auto& o : outliers) {
    x.push_back(field(o));
    y.push_back(o.perfectionist ? 1 : 0);
  }
  return fit_logistic(x, y);
}
}  // namespace

LogisticFit perfectionist_vs_length(const std::vector<OutlierOutcome>& outliers) {
  return fit_outcomes(outliers, [](const OutlierOutcome& o) { return static_cast<double>(o.career_length); });
}

LogisticFit perfectionist_vs_outlier_years(const std::vector<OutlierOutcome>& outliers) {
  return fit_outcomes(outliers, [](const OutlierOutcome& o) { return static_cast<double>(o.productivity_outlier_years); });
}

}  // namespace scimetric
