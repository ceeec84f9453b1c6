#include "scimetric/plane.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scimetric {

namespace {
constexpr std::array<std::string_view, kSectorCount> kNames{"IPpp", "Ipp", "Ppp", "IpPp", "IpPm", "ImPp", "ImPm"};
}

std::string_view sector_name(Sector s) noexcept { return kNames[index(s)]; }

std::optional<Sector> sector_from_name(std::string_view name) noexcept {
  for (std::size_t k = 0; k < kSectorCount; ++k)
    if (kNames[k] == name) return static_cast<Sector>(k);
  return std::nullopt;
}

Sector classify_sector(double I, double P, double tau) {
  if (!std::isfinite(I) || !std::isfinite(P)) throw std::invalid_argument("classify_sector: non-finite score");
  const bool i_out = I > tau;
  const bool p_out = P > tau;
  if (i_out && p_out) return Sector::IPpp;
  if (i_out) return Sector::Ipp;
  if (p_out) return Sector::Ppp;
  if (I >= 0.0) return P >= 0.0 ? Sector::IpPp : Sector::IpPm;
  return P >= 0.0 ? Sector::ImPp : Sector::ImPm;
}

ResearcherCategory categorize_researcher(std::span<const Sector> career) {
  ResearcherCategory c;
  for (Sector s : career) {
    c.perfectionist |= s == Sector::Ipp;
    c.hyperprolific |= s == Sector::Ppp;
    c.hyperprolific_perfectionist |= s == Sector::IPpp;
  }
  return c;
}

std::vector<LabeledCareer> label_careers(const std::vector<CareerYear>& years, double tau) {
  std::map<std::pair<std::string, std::string>, std::vector<const CareerYear*>> grouped;
  for (const auto& cy : years) grouped[{cy.discipline, cy.researcher_id}].push_back(&cy);

  std::vector<LabeledCareer> out;
  out.reserve(grouped.size());
  for (auto& [key, list] : grouped) {
    std::sort(list.begin(), list.end(), [](const CareerYear* a, const CareerYear* b) { return a->year < b->year; });
    LabeledCareer lc{key.second, key.first, {}, {}, {}, 0};
    for (const auto* cy : list) {
      lc.years.push_back(cy->year);
      lc.ages.push_back(cy->career_age);
      lc.sectors.push_back(classify_sector(cy->I, cy->P, tau));
    }
    lc.career_length = list.back()->career_age;
    out.push_back(std::move(lc));
  }
  return out;
}

VennCounts venn_counts(const std::vector<LabeledCareer>& careers) {
  VennCounts v;
  std::size_t years = 0, outlier_years = 0, outliers = 0, single = 0, majority = 0;
  for (const auto& lc : careers) {
    ++v.researchers;
    const auto c = categorize_researcher(lc.sectors);
    std::size_t n_out = 0;
    for (Sector s : lc.sectors) {
      ++v.sector_years[index(s)];
      n_out += is_outlier(s);
    }
    years += lc.sectors.size();
    outlier_years += n_out;

    const bool a = c.perfectionist, b = c.hyperprolific, d = c.hyperprolific_perfectionist;
    if (c.non_outlier()) {
      ++v.non_outlier;
      continue;
    }
    ++outliers;
    single += n_out == 1;
    majority += 2 * n_out > lc.sectors.size();
    if (a && !b && !d) ++v.only_ipp;
    if (!a && b && !d) ++v.only_ppp;
    if (!a && !b && d) ++v.only_ippp;
    if (a && b && !d) ++v.ipp_ppp;
    if (a && !b && d) ++v.ipp_ippp;
    if (!a && b && d) ++v.ppp_ippp;
    if (a && b && d) ++v.all_three;
    v.perfectionist_total += a || d;
    v.hyperprolific_total += b || d;
    v.hyperprolific_perfectionist_total += d;
    v.exclusively_perfectionist += c.exclusively_perfectionist();
    v.exclusively_hyperprolific += c.exclusively_hyperprolific();
    v.both_non_simultaneous += c.both_non_simultaneous();
  }
  auto frac = [](std::size_t num, std::size_t den) { return den ? static_cast<double>(num) / den : 0.0; };
  v.outlier_year_fraction = frac(outlier_years, years);
  v.outlier_researcher_fraction = frac(outliers, v.researchers);
  v.single_outlier_year_fraction = frac(single, outliers);
  v.majority_outlier_years_fraction = frac(majority, outliers);
  return v;
}

OccupationProfile occupation_profile(const LabeledCareer& career) {
  OccupationProfile prof;
  prof.career_length = career.career_length;
  if (career.sectors.empty()) return prof;
  std::array<std::size_t, kSectorCount> counts{};
  for (Sector s : career.sectors) ++counts[index(s)];
  const double n = static_cast<double>(career.sectors.size());
  for (std::size_t k = 0; k < kSectorCount; ++k) prof.fractions[k] = counts[k] / n;
  return prof;
}

std::optional<double> sector_entropy(const OccupationProfile& profile, std::span<const Sector> subset) {
  if (subset.size() < 2) throw std::invalid_argument("sector_entropy: subset needs at least two sectors");
  double total = 0.0;
  for (Sector s : subset) total += profile.fractions[index(s)];
  if (!(total > 0.0)) return std::nullopt;
  double h = 0.0;
  for (Sector s : subset) {
    const double f = profile.fractions[index(s)] / total;
    if (f > 0.0) h -= f * std::log(f);
  }
  return std::clamp(h / std::log(static_cast<double>(subset.size())), 0.0, 1.0);
}

std::vector<ExtremeYear> extreme_hyperprolific(const std::vector<CareerYear>& years, double threshold, double tau) {
  std::vector<ExtremeYear> out;
  for (const auto& cy : years)
    if (cy.P > threshold)
      out.push_back({cy.researcher_id, cy.discipline, cy.year, cy.P, cy.I, classify_sector(cy.I, cy.P, tau)});
  std::sort(out.begin(), out.end(), [](const ExtremeYear& a, const ExtremeYear& b) {
    return std::tie(a.discipline, a.researcher_id, a.year) < std::tie(b.discipline, b.researcher_id, b.year);
  });
  return out;
}

}  // namespace scimetric
