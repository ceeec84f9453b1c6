#pragma once

// Sector-to-sector transitions over consecutive career years and their
// excess over a within-career shuffle null.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "scimetric/plane.hpp"

namespace scimetric {

// Indexed (from-sector, to-sector) in Sector order. Count matrices hold
// integral values.
using SectorMatrix = Eigen::Matrix<double, kSectorCount, kSectorCount>;
using SectorMask = Eigen::Matrix<bool, kSectorCount, kSectorCount>;

enum class GapPolicy {
  Break,   // only calendar-consecutive years y -> y+1 count
  Bridge,  // consecutive records count regardless of gaps
};

SectorMatrix count_transitions(std::span<const int> years, std::span<const Sector> sectors,
                               GapPolicy policy = GapPolicy::Break);

SectorMatrix count_transitions(const std::vector<LabeledCareer>& careers, GapPolicy policy = GapPolicy::Break);

struct TransitionNull {
  SectorMatrix mean = SectorMatrix::Zero();
  SectorMatrix sd = SectorMatrix::Zero();
  int n_shuffles = 0;
};

// Per realization, permutes each researcher's sector labels over that
// researcher's own years (the year skeleton stays fixed) and recounts the
// pooled transitions. Realization r draws from substream (seed, r).
TransitionNull shuffle_null(const std::vector<LabeledCareer>& careers, int n_shuffles, std::uint64_t seed,
                            GapPolicy policy = GapPolicy::Break);

struct TransitionExcessMatrix {
  SectorMatrix observed = SectorMatrix::Zero();
  SectorMatrix null_mean = SectorMatrix::Zero();
  SectorMatrix null_sd = SectorMatrix::Zero();
  // (observed - null_mean) / null_mean; NaN where undefined.
  SectorMatrix excess = SectorMatrix::Zero();
  // (observed - null_mean) / null_sd; NaN where null_sd == 0.
  SectorMatrix z = SectorMatrix::Zero();
  SectorMask defined = SectorMask::Constant(false);
  int n_shuffles = 0;
};

TransitionExcessMatrix excess_matrix(const SectorMatrix& observed, const TransitionNull& null);

struct GroupedCareers {
  std::vector<LabeledCareer> outlier;
  std::vector<LabeledCareer> non_outlier;
};

GroupedCareers split_by_outlier_group(const std::vector<LabeledCareer>& careers);

}  // namespace scimetric
