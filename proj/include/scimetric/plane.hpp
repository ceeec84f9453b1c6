#pragma once

// The seven sectors of the journal-prestige (I) vs productivity (P) plane.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scimetric/normalize.hpp"

namespace scimetric {

inline constexpr double kOutlierThreshold = 3.5;
inline constexpr double kExtremeProductivity = 27.7;

enum class Sector : int {
  IPpp = 0,  // I > tau and P > tau
  Ipp,       // I > tau, P <= tau
  Ppp,       // P > tau, I <= tau
  IpPp,      // 0 <= I <= tau, 0 <= P <= tau
  IpPm,      // 0 <= I <= tau, P < 0
  ImPp,      // I < 0, 0 <= P <= tau
  ImPm,      // I < 0, P < 0
};

inline constexpr std::size_t kSectorCount = 7;
inline constexpr std::array<Sector, kSectorCount> kAllSectors{Sector::IPpp, Sector::Ipp,  Sector::Ppp, Sector::IpPp,
                                                              Sector::IpPm, Sector::ImPp, Sector::ImPm};

constexpr std::size_t index(Sector s) noexcept { return static_cast<std::size_t>(s); }
constexpr bool is_outlier(Sector s) noexcept { return s == Sector::IPpp || s == Sector::Ipp || s == Sector::Ppp; }

std::string_view sector_name(Sector s) noexcept;
std::optional<Sector> sector_from_name(std::string_view name) noexcept;

// Outlier sectors are open at tau, the "+" half-planes closed at 0.
Sector classify_sector(double I, double P, double tau = kOutlierThreshold);

struct ResearcherCategory {
  bool perfectionist = false;                // >= 1 year in Ipp
  bool hyperprolific = false;                // >= 1 year in Ppp
  bool hyperprolific_perfectionist = false;  // >= 1 year in IPpp

  bool non_outlier() const noexcept { return !perfectionist && !hyperprolific && !hyperprolific_perfectionist; }
  bool exclusively_perfectionist() const noexcept {
    return perfectionist && !hyperprolific && !hyperprolific_perfectionist;
  }
  bool exclusively_hyperprolific() const noexcept {
    return hyperprolific && !perfectionist && !hyperprolific_perfectionist;
  }
  // Outlier in both dimensions, within one year (IPpp) or across years.
  bool both_non_simultaneous() const noexcept {
    return hyperprolific_perfectionist || (perfectionist && hyperprolific);
  }
  friend bool operator==(const ResearcherCategory&, const ResearcherCategory&) = default;
};

ResearcherCategory categorize_researcher(std::span<const Sector> career);

// One researcher's labelled career, year-ordered.
struct LabeledCareer {
  std::string researcher_id;
  std::string discipline;
  std::vector<int> years;
  std::vector<int> ages;  // career age A per year
  std::vector<Sector> sectors;
  int career_length = 0;  // L = last year - PhD year
};

// Groups scored years into careers and labels every year.
std::vector<LabeledCareer> label_careers(const std::vector<CareerYear>& years, double tau = kOutlierThreshold);

struct VennCounts {
  std::size_t researchers = 0;
  std::size_t non_outlier = 0;
  // Regions of the three-set diagram over the raw flags (Ipp, Ppp, IPpp).
  std::size_t only_ipp = 0;
  std::size_t only_ppp = 0;
  std::size_t only_ippp = 0;
  std::size_t ipp_ppp = 0;
  std::size_t ipp_ippp = 0;
  std::size_t ppp_ippp = 0;
  std::size_t all_three = 0;
  // IPpp years count towards both supersets.
  std::size_t perfectionist_total = 0;
  std::size_t hyperprolific_total = 0;
  std::size_t hyperprolific_perfectionist_total = 0;
  std::size_t exclusively_perfectionist = 0;
  std::size_t exclusively_hyperprolific = 0;
  std::size_t both_non_simultaneous = 0;
  // Summary fractions.
  double outlier_year_fraction = 0.0;
  double outlier_researcher_fraction = 0.0;
  double single_outlier_year_fraction = 0.0;     // among outlier researchers
  double majority_outlier_years_fraction = 0.0;  // among outlier researchers, > 50% outlier years
  std::array<std::size_t, kSectorCount> sector_years{};
};

VennCounts venn_counts(const std::vector<LabeledCareer>& careers);

struct OccupationProfile {
  std::array<double, kSectorCount> fractions{};
  int career_length = 0;
};

OccupationProfile occupation_profile(const LabeledCareer& career);

// Normalized Shannon entropy of the occupation restricted to `subset`.
// Empty when the researcher has no year in the subset. Requires |subset| >= 2.
std::optional<double> sector_entropy(const OccupationProfile& profile, std::span<const Sector> subset);

inline constexpr std::array<Sector, 3> kOutlierSectors{Sector::IPpp, Sector::Ipp, Sector::Ppp};
inline constexpr std::array<Sector, 2> kSingleOutlierSectors{Sector::Ipp, Sector::Ppp};
inline constexpr std::array<Sector, 4> kNonOutlierSectors{Sector::IpPp, Sector::IpPm, Sector::ImPp, Sector::ImPm};

struct ExtremeYear {
  std::string researcher_id;
  std::string discipline;
  int year = 0;
  double P = 0.0;
  double I = 0.0;
  Sector sector = Sector::ImPm;
};

// Researcher-years with P above `threshold`, labelled with their sector.
std::vector<ExtremeYear> extreme_hyperprolific(const std::vector<CareerYear>& years,
                                               double threshold = kExtremeProductivity,
                                               double tau = kOutlierThreshold);

}  // namespace scimetric
