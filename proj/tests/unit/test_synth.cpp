#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "scimetric/corpus.hpp"
#include "scimetric/error.hpp"
#include "scimetric/normalize.hpp"
#include "scimetric/plane.hpp"
#include "scimetric/synth.hpp"
#include "support.hpp"

using namespace scimetric;
namespace fs = std::filesystem;

namespace {

SynthConfig small(std::uint64_t seed = 1) {
  auto cfg = SynthConfig::defaults();
  for (auto& d : cfg.disciplines) d.researchers = 80;
  cfg.null_realizations = 200;
  cfg.seed = seed;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Analysed {
  JoinResult joined;
  NormalizeResult norm;
  std::vector<LabeledCareer> careers;
};

Analysed analyse(const SynthCorpus& corpus) {
  Analysed a;
  auto pubs = corpus.publications;
  deduplicate(pubs);
  a.joined = join_metrics(pubs, corpus.metrics);
  const auto build = build_career_years(a.joined.records, corpus.meta);
  NormalizeOptions opt;
  opt.n_realizations = 1000;
  opt.seed = 77;
  a.norm = normalize_corpus(build.years, build.pools, opt);
  a.careers = label_careers(a.norm.years);
  return a;
}

bool matches(PlantedCategory planted, const ResearcherCategory& c) {
  switch (planted) {
    case PlantedCategory::NonOutlier: return c.non_outlier();
    case PlantedCategory::Perfectionist: return c.exclusively_perfectionist();
    case PlantedCategory::Hyperprolific: return c.exclusively_hyperprolific();
    case PlantedCategory::BothSimultaneous: return c.hyperprolific_perfectionist;
    case PlantedCategory::BothNonSimultaneous:
      return c.perfectionist && c.hyperprolific && !c.hyperprolific_perfectionist;
  }
  return false;
}

}  // namespace

TEST_CASE("same seed, same bytes") {
  const auto root = fs::temp_directory_path() / ("scimetric_synth_" + std::to_string(::getpid()));
  const auto cfg = small(5);
  write_corpus(generate_corpus(cfg), root / "a");
  write_corpus(generate_corpus(cfg), root / "b");
  for (const char* f : {"publications.csv", "metrics.csv", "meta.csv", "ground_truth.json"}) {
    const auto a = slurp(root / "a" / f);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(root / "b" / f));
  }
  write_corpus(generate_corpus(small(6)), root / "c");
  CHECK(slurp(root / "a" / "publications.csv") != slurp(root / "c" / "publications.csv"));
  fs::remove_all(root);
}

TEST_CASE("planted categories are recovered by the scoring pipeline") {
  auto cfg = small(2);
  cfg.outlier_rate = 0.3;
  cfg.both_rate = 0.4;
  const auto corpus = generate_corpus(cfg);
  const auto a = analyse(corpus);

  std::map<std::string, const LabeledCareer*> by_id;
  for (const auto& c : a.careers) by_id[c.researcher_id] = &c;
  REQUIRE(by_id.size() == corpus.truth.researchers.size());

  std::map<std::string, const CareerYear*> scored;
  for (const auto& y : a.norm.years) scored[y.researcher_id + "/" + std::to_string(y.year)] = &y;

  std::set<PlantedCategory> seen;
  std::size_t years = 0, agree = 0;
  for (const auto& t : corpus.truth.researchers) {
    const auto& c = *by_id.at(t.researcher_id);
    CHECK_MESSAGE(matches(t.category, categorize_researcher(c.sectors)), t.researcher_id);
    seen.insert(t.category);
    for (const auto& py : t.years) {
      const auto& y = *scored.at(t.researcher_id + "/" + std::to_string(py.year));
      // Counts and cell estimates are shared, so P is reproduced exactly.
      CHECK(y.p == py.p);
      CHECK(y.P == doctest::Approx(py.P).epsilon(1e-9));
      // Outlier sectors sit at least a margin from tau; the four inner sectors
      // split at zero, where null noise may flip a sign.
      const Sector got = classify_sector(y.I, y.P);
      CHECK_MESSAGE(is_outlier(got) == is_outlier(py.sector), t.researcher_id << " " << py.year);
      if (is_outlier(py.sector)) CHECK(got == py.sector);
      ++years;
      agree += got == py.sector;
    }
  }
  CHECK(seen.size() == 5);
  CHECK(agree >= 0.8 * static_cast<double>(years));

  const auto v = venn_counts(a.careers);
  CHECK(v.non_outlier == corpus.truth.count(PlantedCategory::NonOutlier));
  CHECK(v.exclusively_perfectionist == corpus.truth.count(PlantedCategory::Perfectionist));
  CHECK(v.exclusively_hyperprolific == corpus.truth.count(PlantedCategory::Hyperprolific));
  CHECK(v.hyperprolific_perfectionist_total == corpus.truth.count(PlantedCategory::BothSimultaneous));
}

TEST_CASE("ground-truth categories follow the planted years") {
  auto cfg = small(11);
  cfg.outlier_rate = 0.4;
  cfg.both_rate = 0.5;
  const auto corpus = generate_corpus(cfg);
  std::size_t prestige_years = 0;
  for (const auto& t : corpus.truth.researchers) {
    std::vector<Sector> s;
    for (const auto& y : t.years) {
      s.push_back(y.sector);
      prestige_years += y.sector == Sector::Ipp || y.sector == Sector::IPpp;
    }
    CHECK(matches(t.category, categorize_researcher(s)));
    CHECK(t.perfectionist == (std::count(s.begin(), s.end(), Sector::Ipp) > 0));
  }
  // Demotion is a rare fallback, not the norm.
  CHECK(corpus.truth.demoted_years <= prestige_years / 20);
}

TEST_CASE("match rate and duplicates are exact") {
  auto cfg = small(3);
  cfg.metric_coverage = 0.8;
  cfg.duplicate_rate = 0.05;
  const auto corpus = generate_corpus(cfg);
  auto pubs = corpus.publications;
  CHECK(deduplicate(pubs) == corpus.truth.duplicate_rows);
  const auto joined = join_metrics(pubs, corpus.metrics);
  CHECK(joined.matched == corpus.truth.matched_articles);
  CHECK(joined.records.size() == corpus.truth.matched_articles + corpus.truth.unmatched_articles);
  CHECK(joined.match_rate() == doctest::Approx(corpus.truth.match_rate()).epsilon(1e-12));
  CHECK(corpus.truth.match_rate() == doctest::Approx(0.8).epsilon(1e-3));
}

TEST_CASE("zero outlier rates plant no outliers") {
  auto cfg = small(4);
  cfg.outlier_rate = 0.0;
  const auto corpus = generate_corpus(cfg);
  CHECK(corpus.truth.count(PlantedCategory::NonOutlier) == corpus.truth.researchers.size());
  const auto v = venn_counts(analyse(corpus).careers);
  CHECK(v.non_outlier == corpus.truth.researchers.size());
}

TEST_CASE("eligibility, planted productivity years and extreme years") {
  auto cfg = small(7);
  cfg.extreme_years = 3;
  const auto corpus = generate_corpus(cfg);
  CHECK(corpus.truth.extreme_years == 3);
  std::size_t extreme_seen = 0;
  for (const auto& t : corpus.truth.researchers) {
    CHECK(t.bayes_eligible == (t.category == PlantedCategory::NonOutlier && t.career_length > 5));
    for (const auto& y : t.years) {
      CHECK(y.career_age == y.year - t.phd_year);
      if (y.sector == Sector::Ppp || y.sector == Sector::IPpp) CHECK(y.P > kOutlierThreshold);
      else CHECK(y.P <= kOutlierThreshold);
      extreme_seen += y.P >= kExtremeProductivity;
    }
  }
  CHECK(extreme_seen >= 3);
}

TEST_CASE("a discipline thinned in one year is filtered out") {
  auto cfg = small(8);
  cfg.disciplines[1].dropout_year = 2005;
  cfg.disciplines[1].dropout_fraction = 0.9;
  const auto corpus = generate_corpus(cfg);
  const int thin = corpus.truth.disciplines.at(cfg.disciplines[1].name).min_active();
  const int thick = corpus.truth.disciplines.at(cfg.disciplines[0].name).min_active();
  REQUIRE(thin < thick);
  auto pubs = corpus.publications;
  deduplicate(pubs);
  const auto years = build_career_years(join_metrics(pubs, corpus.metrics).records, corpus.meta).years;
  const auto f = filter_disciplines(years, thin + 1, {cfg.year_from, cfg.year_to});
  const auto kept = f.kept();
  CHECK(std::find(kept.begin(), kept.end(), cfg.disciplines[1].name) == kept.end());
  CHECK(std::find(kept.begin(), kept.end(), cfg.disciplines[0].name) != kept.end());
  // Kept and dropped rows partition the input.
  std::size_t dropped = 0;
  for (const auto& y : years) dropped += y.discipline == cfg.disciplines[1].name;
  CHECK(f.years.size() + dropped == years.size());
}

TEST_CASE("configuration JSON round trip and validation") {
  auto cfg = small(9);
  cfg.disciplines[2].dropout_year = 2001;
  cfg.hierarchy.sigma_A = 0.01;
  cfg.perfectionist.slope = -0.1;
  const auto text = synth_config_to_json(cfg);
  CHECK(synth_config_to_json(synth_config_from_json(text)) == text);
  CHECK_THROWS_AS(synth_config_from_json("{\"gap_rate\": 2}"), DataError);
  CHECK_THROWS_AS(synth_config_from_json("{nope"), DataError);
  CHECK_THROWS_AS(synth_config_from_json("{\"disciplines\": []}"), DataError);
}

TEST_CASE("auxiliary generators") {
  HierarchicalTruth h;
  h.sigma_A = 0.02;
  const auto ds = generate_hierarchical_dataset(h, 30, 12, 3);
  CHECK(ds.data.rows() == 360);
  CHECK(ds.data.researchers.size() == 30);
  CHECK(ds.coefficients.rows() == 30);
  CHECK(ds.coefficients.cols() == 3);
  CHECK(*std::min_element(ds.data.A.begin(), ds.data.A.end()) == 1.0);
  CHECK(*std::max_element(ds.data.A.begin(), ds.data.A.end()) == 12.0);
  CHECK(std::abs(ds.coefficients.col(1).mean() - h.mu_P) < 4 * h.sigma_P / std::sqrt(30.0));

  SectorMatrix identity = SectorMatrix::Identity();
  Eigen::Matrix<double, 7, 1> initial = Eigen::Matrix<double, 7, 1>::Zero();
  initial(index(Sector::IpPp)) = 1.0;
  const auto careers = generate_sector_careers(identity, initial, 10, 6, 1);
  REQUIRE(careers.size() == 10);
  for (const auto& c : careers) {
    CHECK(c.sectors == std::vector<Sector>(6, Sector::IpPp));
    CHECK(c.years.back() - c.years.front() == 5);
  }

  const auto s = generate_logistic_sample({0.0, 0.0}, 2000, 3, 9, 2);
  CHECK(*std::min_element(s.x.begin(), s.x.end()) == 3.0);
  CHECK(*std::max_element(s.x.begin(), s.x.end()) == 9.0);
  const double ones = std::count(s.y.begin(), s.y.end(), 1);
  CHECK(std::abs(ones / 2000.0 - 0.5) < 4 * 0.5 / std::sqrt(2000.0));
}
