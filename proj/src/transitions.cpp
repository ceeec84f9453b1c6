#include "scimetric/transitions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "scimetric/rng.hpp"

namespace scimetric {

SectorMatrix count_transitions(std::span<const int> years, std::span<const Sector> sectors, GapPolicy policy) {
  if (years.size() != sectors.size()) throw std::invalid_argument("count_transitions: length mismatch");
  SectorMatrix m = SectorMatrix::Zero();
  for (std::size_t t = 1; t < years.size(); ++t) {
    if (policy == GapPolicy::Break && years[t] != years[t - 1] + 1) continue;
    m(index(sectors[t - 1]), index(sectors[t])) += 1.0;
  }
  return m;
}

SectorMatrix count_transitions(const std::vector<LabeledCareer>& careers, GapPolicy policy) {
  SectorMatrix m = SectorMatrix::Zero();
  for (const auto& c : careers) m += count_transitions(c.years, c.sectors, policy);
  return m;
}

TransitionNull shuffle_null(const std::vector<LabeledCareer>& careers, int n_shuffles, std::uint64_t seed,
                            GapPolicy policy) {
  if (n_shuffles < 2) throw std::invalid_argument("shuffle_null: need at least 2 shuffles");
  std::vector<SectorMatrix> draws(static_cast<std::size_t>(n_shuffles));
  parallel_for(draws.size(), [&](std::size_t r) {
    Engine rng = substream(seed, std::string_view("career-shuffle"), r);
    SectorMatrix m = SectorMatrix::Zero();
    std::vector<Sector> labels;
    for (const auto& c : careers) {
      labels.assign(c.sectors.begin(), c.sectors.end());
      std::shuffle(labels.begin(), labels.end(), rng);
      m += count_transitions(c.years, labels, policy);
    }
    draws[r] = m;
  });

  TransitionNull out;
  out.n_shuffles = n_shuffles;
  for (const auto& d : draws) out.mean += d;
  out.mean /= static_cast<double>(n_shuffles);
  SectorMatrix ss = SectorMatrix::Zero();
  for (const auto& d : draws) ss += (d - out.mean).cwiseAbs2();
  out.sd = (ss / static_cast<double>(n_shuffles - 1)).cwiseSqrt();
  return out;
}

TransitionExcessMatrix excess_matrix(const SectorMatrix& observed, const TransitionNull& null) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  TransitionExcessMatrix e;
  e.observed = observed;
  e.null_mean = null.mean;
  e.null_sd = null.sd;
  e.n_shuffles = null.n_shuffles;
  for (Eigen::Index a = 0; a < observed.rows(); ++a) {
    for (Eigen::Index b = 0; b < observed.cols(); ++b) {
      const double mean = null.mean(a, b);
      const double diff = observed(a, b) - mean;
      e.defined(a, b) = mean > 0.0;
      e.excess(a, b) = mean > 0.0 ? diff / mean : nan;
      e.z(a, b) = null.sd(a, b) > 0.0 ? diff / null.sd(a, b) : nan;
    }
  }
  return e;
}

GroupedCareers split_by_outlier_group(const std::vector<LabeledCareer>& careers) {
  GroupedCareers g;
  for (const auto& c : careers) {
    if (categorize_researcher(c.sectors).non_outlier())
      g.non_outlier.push_back(c);
    else
      g.outlier.push_back(c);
  }
  return g;
}

}  // namespace scimetric
