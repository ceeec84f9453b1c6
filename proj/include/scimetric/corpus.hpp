#pragma once

// Publication records, journal metrics and per-researcher career series.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace scimetric {

struct PublicationRecord {
  std::string researcher_id;
  std::string discipline;
  int year = 0;
  std::string journal_id;
  std::optional<std::string> doi;

  friend bool operator==(const PublicationRecord&, const PublicationRecord&) = default;
};

struct ResearcherMeta {
  std::string researcher_id;
  std::string discipline;
  int phd_year = 0;

  friend bool operator==(const ResearcherMeta&, const ResearcherMeta&) = default;
};

struct Rejection {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

struct ValidationReport {
  std::string source;
  std::size_t rows_read = 0;
  std::vector<Rejection> rejections;
  std::vector<std::string> warnings;
};

struct YearWindow {
  int first = 1900;
  int last = 2100;
  bool contains(int y) const noexcept { return y >= first && y <= last; }
};

template <class Record>
struct Loaded {
  std::vector<Record> records;
  ValidationReport report;
};

class JournalMetricTable {
 public:
  // Throws DataError on a negative/non-finite value or a duplicate key.
  void add(const std::string& journal_id, int year, double value);
  std::optional<double> find(const std::string& journal_id, int year) const;
  std::size_t size() const noexcept { return values_.size(); }
  const std::map<std::pair<std::string, int>, double>& entries() const noexcept { return values_; }

 private:
  std::map<std::pair<std::string, int>, double> values_;
};

// Format is chosen by extension: `.jsonl` reads JSON Lines, anything else CSV.
// An unreadable file or a wrong header throws DataError; bad rows are reported.
Loaded<PublicationRecord> load_publications(const std::filesystem::path& path, YearWindow window = {});
Loaded<ResearcherMeta> load_meta(const std::filesystem::path& path);
JournalMetricTable load_metrics(const std::filesystem::path& path, ValidationReport* report = nullptr);

void write_publications_csv(const std::filesystem::path& path, const std::vector<PublicationRecord>& records);
void write_meta_csv(const std::filesystem::path& path, const std::vector<ResearcherMeta>& meta);
void write_metrics_csv(const std::filesystem::path& path, const JournalMetricTable& table);

// Drops repeated (researcher_id, doi) rows; rows without a DOI are kept.
// Returns the number of rows removed.
std::size_t deduplicate(std::vector<PublicationRecord>& records);

struct AnnotatedRecord {
  PublicationRecord record;
  std::optional<double> metric;
};

struct JoinResult {
  std::vector<AnnotatedRecord> records;
  std::size_t matched = 0;
  double match_rate() const noexcept {
    return records.empty() ? 0.0 : static_cast<double>(matched) / static_cast<double>(records.size());
  }
};

// Exact-year lookup of (journal_id, year).
JoinResult join_metrics(const std::vector<PublicationRecord>& records, const JournalMetricTable& table);

struct CareerYearRaw {
  std::string researcher_id;
  std::string discipline;
  int year = 0;
  int p = 0;         // matched articles that year
  double i = 0.0;    // mean metric of those articles
  int career_age = 0;

  friend bool operator==(const CareerYearRaw&, const CareerYearRaw&) = default;
};

struct CellKey {
  std::string discipline;
  int year = 0;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

// Per (discipline, year) multiset of matched article metrics, sorted ascending.
using ArticlePools = std::map<CellKey, std::vector<double>>;

struct CareerBuild {
  std::vector<CareerYearRaw> years;  // sorted by (discipline, researcher, year)
  ArticlePools pools;
  std::size_t dropped_missing_meta = 0;
  std::vector<std::string> warnings;
};

// Tolerance (years) for publications preceding the PhD before meta is flagged.
inline constexpr int kPhdYearTolerance = 5;

CareerBuild build_career_years(const std::vector<AnnotatedRecord>& records,
                               const std::vector<ResearcherMeta>& meta);

struct DisciplineCoverage {
  std::string discipline;
  int min_researchers_in_year = 0;
  int worst_year = 0;
  bool kept = false;
};

struct FilterResult {
  std::vector<CareerYearRaw> years;
  std::vector<DisciplineCoverage> coverage;
  std::vector<std::string> warnings;
  std::vector<std::string> kept() const;
};

// Keeps disciplines with at least `min_researchers` researchers having a
// career year in every year of `window`.
FilterResult filter_disciplines(const std::vector<CareerYearRaw>& years, int min_researchers, YearWindow window);

struct InflationTrend {
  double p_per_decade = 0.0;
  double i_per_decade = 0.0;
  double p_se = 0.0;  // standard errors of the slopes, same units
  double i_se = 0.0;
  int n_years = 0;
};

// OLS slope of the yearly means of p and i against calendar year, times ten.
// An empty `discipline` pools every discipline.
InflationTrend inflation_trend(const std::vector<CareerYearRaw>& years, const std::string& discipline = {});

// Career length L = last publication year - PhD year, per researcher.
std::map<std::string, int> career_lengths(const std::vector<CareerYearRaw>& years);

}  // namespace scimetric
