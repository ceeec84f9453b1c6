#include "scimetric/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <unordered_map>

#include "scimetric/csv.hpp"
#include "scimetric/error.hpp"

namespace scimetric {
namespace {

using nlohmann::json;

bool is_jsonl(const std::filesystem::path& path) { return path.extension() == ".jsonl"; }

// Uniform row access for CSV rows and JSON objects.
class FieldSource {
 public:
  virtual ~FieldSource() = default;
  virtual std::optional<std::string> get(const std::string& name) const = 0;
};

class CsvRow final : public FieldSource {
 public:
  CsvRow(const std::vector<std::string>& header, const std::vector<std::string>& fields)
      : header_(header), fields_(fields) {}
  std::optional<std::string> get(const std::string& name) const override {
    for (std::size_t k = 0; k < header_.size(); ++k)
      if (header_[k] == name) return k < fields_.size() ? std::optional(fields_[k]) : std::nullopt;
    return std::nullopt;
  }

 private:
  const std::vector<std::string>& header_;
  const std::vector<std::string>& fields_;
};

class JsonRow final : public FieldSource {
 public:
  explicit JsonRow(const json& obj) : obj_(obj) {}
  std::optional<std::string> get(const std::string& name) const override {
    const auto it = obj_.find(name);
    if (it == obj_.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    if (it->is_number()) return csv::format_double(it->get<double>());
    return std::nullopt;
  }

 private:
  const json& obj_;
};

// Calls parse_row(source, line, report) for every data row of a CSV or JSONL file.
template <class RowFn>
ValidationReport scan_rows(const std::filesystem::path& path, const std::vector<std::string>& required, RowFn&& parse_row) {
  ValidationReport report;
  report.source = path.string();
  if (is_jsonl(path)) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ++report.rows_read;
      json obj = json::parse(line, nullptr, false);
      if (obj.is_discarded() || !obj.is_object()) {
        report.rejections.push_back({lineno, "malformed JSON object"});
        continue;
      }
      parse_row(JsonRow(obj), lineno, report);
    }
    return report;
  }
  csv::Reader reader(path);
  for (const auto& name : required) reader.column(name);
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    ++report.rows_read;
    if (fields.size() != reader.header().size()) {
      report.rejections.push_back({reader.line(), "expected " + std::to_string(reader.header().size()) +
                                                      " fields, found " + std::to_string(fields.size())});
      continue;
    }
    parse_row(CsvRow(reader.header(), fields), reader.line(), report);
  }
  return report;
}

bool require_text(const FieldSource& row, const char* name, std::string& out, std::size_t line,
                  ValidationReport& report) {
  auto v = row.get(name);
  if (!v || v->empty()) {
    report.rejections.push_back({line, std::string("empty ") + name});
    return false;
  }
  out = std::move(*v);
  return true;
}

bool require_int(const FieldSource& row, const char* name, int& out, std::size_t line, ValidationReport& report) {
  const auto v = row.get(name);
  if (!v || !csv::parse_int(*v, out)) {
    report.rejections.push_back({line, std::string("invalid ") + name});
    return false;
  }
  return true;
}

}  // namespace

void JournalMetricTable::add(const std::string& journal_id, int year, double value) {
  if (!std::isfinite(value) || value < 0.0)
    throw DataError("metric for " + journal_id + "/" + std::to_string(year) + " must be finite and non-negative");
  if (!values_.emplace(std::make_pair(journal_id, year), value).second)
    throw DataError("duplicate metric key " + journal_id + "/" + std::to_string(year));
}

std::optional<double> JournalMetricTable::find(const std::string& journal_id, int year) const {
  const auto it = values_.find({journal_id, year});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

Loaded<PublicationRecord> load_publications(const std::filesystem::path& path, YearWindow window) {
  Loaded<PublicationRecord> out;
  out.report = scan_rows(path, {"researcher_id", "discipline", "year", "journal_id", "doi"},
                         [&](const FieldSource& row, std::size_t line, ValidationReport& report) {
                           PublicationRecord rec;
                           if (!require_text(row, "researcher_id", rec.researcher_id, line, report)) return;
                           if (!require_text(row, "discipline", rec.discipline, line, report)) return;
                           if (!require_int(row, "year", rec.year, line, report)) return;
                           if (!window.contains(rec.year)) {
                             report.rejections.push_back({line, "year outside data window"});
                             return;
                           }
                           if (!require_text(row, "journal_id", rec.journal_id, line, report)) return;
                           if (auto doi = row.get("doi"); doi && !doi->empty()) rec.doi = std::move(*doi);
                           out.records.push_back(std::move(rec));
                         });
  return out;
}

Loaded<ResearcherMeta> load_meta(const std::filesystem::path& path) {
  Loaded<ResearcherMeta> out;
  std::set<std::string> seen;
  out.report = scan_rows(path, {"researcher_id", "discipline", "phd_year"},
                         [&](const FieldSource& row, std::size_t line, ValidationReport& report) {
                           ResearcherMeta m;
                           if (!require_text(row, "researcher_id", m.researcher_id, line, report)) return;
                           if (!require_text(row, "discipline", m.discipline, line, report)) return;
                           if (!require_int(row, "phd_year", m.phd_year, line, report)) return;
                           if (!seen.insert(m.researcher_id).second) {
                             report.rejections.push_back({line, "duplicate researcher_id"});
                             return;
                           }
                           out.records.push_back(std::move(m));
                         });
  return out;
}

JournalMetricTable load_metrics(const std::filesystem::path& path, ValidationReport* report_out) {
  JournalMetricTable table;
  auto report = scan_rows(path, {"journal_id", "year", "value"},
                          [&](const FieldSource& row, std::size_t line, ValidationReport& report) {
                            std::string journal;
                            int year = 0;
                            double value = 0.0;
                            if (!require_text(row, "journal_id", journal, line, report)) return;
                            if (!require_int(row, "year", year, line, report)) return;
                            const auto v = row.get("value");
                            if (!v || !csv::parse_double(*v, value)) {
                              report.rejections.push_back({line, "invalid value"});
                              return;
                            }
                            try {
                              table.add(journal, year, value);
                            } catch (const DataError& e) {
                              report.rejections.push_back({line, e.what()});
                            }
                          });
  if (report_out) *report_out = std::move(report);
  return table;
}

void write_publications_csv(const std::filesystem::path& path, const std::vector<PublicationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "researcher_id,discipline,year,journal_id,doi\n";
  for (const auto& r : records)
    out << csv::escape(r.researcher_id) << ',' << csv::escape(r.discipline) << ',' << r.year << ','
        << csv::escape(r.journal_id) << ',' << csv::escape(r.doi.value_or("")) << '\n';
}

void write_meta_csv(const std::filesystem::path& path, const std::vector<ResearcherMeta>& meta) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "researcher_id,discipline,phd_year\n";
  for (const auto& m : meta)
    out << csv::escape(m.researcher_id) << ',' << csv::escape(m.discipline) << ',' << m.phd_year << '\n';
}

void write_metrics_csv(const std::filesystem::path& path, const JournalMetricTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "journal_id,year,value\n";
  for (const auto& [key, value] : table.entries())
    out << csv::escape(key.first) << ',' << key.second << ',' << csv::format_double(value) << '\n';
}

std::size_t deduplicate(std::vector<PublicationRecord>& records) {
  std::set<std::pair<std::string, std::string>> seen;
  const auto before = records.size();
  std::erase_if(records, [&](const PublicationRecord& r) {
    if (!r.doi) return false;
    return !seen.emplace(r.researcher_id, *r.doi).second;
  });
  return before - records.size();
}

JoinResult join_metrics(const std::vector<PublicationRecord>& records, const JournalMetricTable& table) {
  JoinResult out;
  out.records.reserve(records.size());
  for (const auto& r : records) {
    auto metric = table.find(r.journal_id, r.year);
    if (metric) ++out.matched;
    out.records.push_back({r, metric});
  }
  return out;
}

CareerBuild build_career_years(const std::vector<AnnotatedRecord>& records, const std::vector<ResearcherMeta>& meta) {
  std::unordered_map<std::string, const ResearcherMeta*> by_id;
  for (const auto& m : meta) by_id.emplace(m.researcher_id, &m);

  struct Key {
    std::string discipline, researcher;
    int year;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::vector<double>> grouped;
  std::set<std::string> missing;
  CareerBuild out;
  for (const auto& a : records) {
    if (!a.metric) continue;
    const auto& r = a.record;
    if (!by_id.count(r.researcher_id)) {
      ++out.dropped_missing_meta;
      missing.insert(r.researcher_id);
      continue;
    }
    grouped[{r.discipline, r.researcher_id, r.year}].push_back(*a.metric);
    out.pools[{r.discipline, r.year}].push_back(*a.metric);
  }
  for (const auto& id : missing) out.warnings.push_back("researcher " + id + " missing from meta; records dropped");
  for (auto& [cell, pool] : out.pools) std::sort(pool.begin(), pool.end());

  std::map<std::string, int> first_year;
  out.years.reserve(grouped.size());
  for (auto& [key, metrics] : grouped) {
    std::sort(metrics.begin(), metrics.end());
    double sum = 0.0;
    for (double m : metrics) sum += m;
    const auto& m = *by_id.at(key.researcher);
    out.years.push_back({key.researcher, key.discipline, key.year, static_cast<int>(metrics.size()),
                         sum / static_cast<double>(metrics.size()), key.year - m.phd_year});
    auto [it, inserted] = first_year.emplace(key.researcher, key.year);
    if (!inserted) it->second = std::min(it->second, key.year);
  }
  for (const auto& [id, year] : first_year) {
    const int phd = by_id.at(id)->phd_year;
    if (phd > year + kPhdYearTolerance)
      out.warnings.push_back("researcher " + id + ": phd_year " + std::to_string(phd) +
                             " is after first publication year " + std::to_string(year));
  }
  return out;
}

std::vector<std::string> FilterResult::kept() const {
  std::vector<std::string> out;
  for (const auto& c : coverage)
    if (c.kept) out.push_back(c.discipline);
  return out;
}

FilterResult filter_disciplines(const std::vector<CareerYearRaw>& years, int min_researchers, YearWindow window) {
  if (min_researchers < 1) throw std::invalid_argument("filter_disciplines: min_researchers must be >= 1");
  if (window.first > window.last) throw std::invalid_argument("filter_disciplines: empty year window");

  std::map<std::string, std::map<int, std::set<std::string>>> active;
  for (const auto& cy : years)
    if (window.contains(cy.year)) active[cy.discipline][cy.year].insert(cy.researcher_id);
  for (const auto& cy : years) active.try_emplace(cy.discipline);

  FilterResult out;
  std::set<std::string> kept;
  for (const auto& [discipline, per_year] : active) {
    DisciplineCoverage cov{discipline, std::numeric_limits<int>::max(), window.first, false};
    for (int y = window.first; y <= window.last; ++y) {
      const auto it = per_year.find(y);
      const int n = it == per_year.end() ? 0 : static_cast<int>(it->second.size());
      if (n < cov.min_researchers_in_year) {
        cov.min_researchers_in_year = n;
        cov.worst_year = y;
      }
    }
    cov.kept = cov.min_researchers_in_year >= min_researchers;
    if (cov.kept) kept.insert(discipline);
    out.coverage.push_back(cov);
  }
  for (const auto& cy : years)
    if (kept.count(cy.discipline) && window.contains(cy.year)) out.years.push_back(cy);
  if (kept.empty()) out.warnings.push_back("no discipline passes the coverage filter");
  return out;
}

namespace {
struct Slope {
  double slope, se;
};

Slope ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  const double b = sxy / sxx;
  if (x.size() < 3) return {b, std::numeric_limits<double>::quiet_NaN()};
  double ssr = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - my - b * (x[k] - mx);
    ssr += r * r;
  }
  return {b, std::sqrt(ssr / (n - 2.0) / sxx)};
}
}  // namespace

InflationTrend inflation_trend(const std::vector<CareerYearRaw>& years, const std::string& discipline) {
  std::map<int, std::pair<double, double>> sums;
  std::map<int, int> counts;
  for (const auto& cy : years) {
    if (!discipline.empty() && cy.discipline != discipline) continue;
    auto& s = sums[cy.year];
    s.first += cy.p;
    s.second += cy.i;
    ++counts[cy.year];
  }
  if (sums.size() < 2) throw NumericalError("inflation_trend: need at least two distinct years");
  std::vector<double> x, mp, mi;
  for (const auto& [year, s] : sums) {
    const double n = counts[year];
    x.push_back(year);
    mp.push_back(s.first / n);
    mi.push_back(s.second / n);
  }
  const auto sp = ols_slope(x, mp);
  const auto si = ols_slope(x, mi);
  return {10.0 * sp.slope, 10.0 * si.slope, 10.0 * sp.se, 10.0 * si.se, static_cast<int>(x.size())};
}

std::map<std::string, int> career_lengths(const std::vector<CareerYearRaw>& years) {
  std::map<std::string, int> out;
  for (const auto& cy : years) {
    const int phd = cy.year - cy.career_age;
    auto [it, inserted] = out.emplace(cy.researcher_id, cy.year - phd);
    if (!inserted) it->second = std::max(it->second, cy.year - phd);
  }
  return out;
}

}  // namespace scimetric
