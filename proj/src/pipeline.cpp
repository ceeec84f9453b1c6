#include "scimetric/pipeline.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "scimetric/bayes.hpp"
#include "scimetric/csv.hpp"
#include "scimetric/plane.hpp"
#include "scimetric/stats.hpp"
#include "scimetric/svg.hpp"

namespace scimetric {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kManifestVersion = 1;

const char* sampling_name(Sampling s) { return s == Sampling::WithReplacement ? "with" : "without"; }
const char* estimator_name(NullEstimator e) { return e == NullEstimator::Huber ? "huber" : "moments"; }
const char* gap_name(GapPolicy g) { return g == GapPolicy::Break ? "break" : "bridge"; }
const char* window_name(WindowAlignment w) { return w == WindowAlignment::Centered ? "centered" : "trailing"; }
const char* unit_name(PermutationUnit u) { return u == PermutationUnit::ResearcherYear ? "researcher-year" : "researcher"; }

template <class Enum>
Enum parse_choice(const std::string& key, const std::string& value,
                  std::initializer_list<std::pair<const char*, Enum>> choices) {
  for (const auto& [name, v] : choices)
    if (value == name) return v;
  throw std::invalid_argument("config: invalid value '" + value + "' for " + key);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string fmt(double v) { return csv::format_double(v); }

// Rows of comma-joined fields.
class CsvOut {
 public:
  explicit CsvOut(std::initializer_list<std::string> header) { row(std::vector<std::string>(header)); }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) s_ << (k ? "," : "") << csv::escape(fields[k]);
    s_ << '\n';
  }
  std::string str() const { return s_.str(); }

 private:
  std::ostringstream s_;
};

fs::path stage_dir(const RunConfig& c, Stage s) { return c.out / std::string(stage_name(s)); }

// Collects provenance for one stage run.
class Manifest {
 public:
  Manifest(Stage stage, const RunConfig& config) : stage_(stage), config_(config), start_(clock::now()) {}

  void input(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("missing input " + path.string());
    inputs_.push_back({{"path", rel(path)}, {"sha256", sha256_file(path)}});
  }
  // Declares and checks an artifact of an upstream stage.
  fs::path upstream(Stage producer, const std::string& file) {
    const fs::path dir = stage_dir(config_, producer);
    const fs::path path = dir / file;
    if (!fs::exists(path))
      throw MissingArtifactError("missing " + path.string() + "; run `scimetric " + std::string(stage_name(producer)) +
                                 "` first");
    const std::string name(stage_name(producer));
    if (!upstream_seen_.count(name) && fs::exists(dir / "manifest.json")) {
      upstream_seen_.insert(name);
      upstream_.push_back({{"stage", name}, {"manifest_sha256", sha256_file(dir / "manifest.json")}});
    }
    input(path);
    return path;
  }
  void output(const fs::path& path, const std::string& text) {
    write_text(path, text);
    outputs_.push_back({{"path", rel(path)}, {"sha256", sha256_file(path)}});
  }
  void write() {
    const double seconds = std::chrono::duration<double>(clock::now() - start_).count();
    ordered_json m;
    m["version"] = kManifestVersion;
    m["stage"] = std::string(stage_name(stage_));
    m["seed"] = config_.seed;
    m["settings"] = ordered_json::parse(config_.settings_json());
    m["inputs"] = inputs_;
    m["upstream"] = upstream_;
    m["outputs"] = outputs_;
    m["timings"] = {{"wall_seconds", seconds}};
    write_text(stage_dir(config_, stage_) / "manifest.json", m.dump(2) + "\n");
  }

 private:
  using clock = std::chrono::steady_clock;
  std::string rel(const fs::path& p) const {
    const auto r = fs::relative(p, config_.out);
    return r.empty() || *r.begin() == ".." ? p.generic_string() : r.generic_string();
  }
  Stage stage_;
  const RunConfig& config_;
  clock::time_point start_;
  ordered_json inputs_ = ordered_json::array(), outputs_ = ordered_json::array(), upstream_ = ordered_json::array();
  std::set<std::string> upstream_seen_;
};

// ---- artifact readers -------------------------------------------------------

int int_field(const std::vector<std::string>& f, std::size_t k, const csv::Reader& r) {
  int v = 0;
  if (k >= f.size() || !csv::parse_int(f[k], v)) throw DataError("bad integer at line " + std::to_string(r.line()));
  return v;
}
double double_field(const std::vector<std::string>& f, std::size_t k, const csv::Reader& r) {
  double v = 0;
  if (k >= f.size() || !csv::parse_double(f[k], v)) throw DataError("bad number at line " + std::to_string(r.line()));
  return v;
}
const std::string& text_field(const std::vector<std::string>& f, std::size_t k, const csv::Reader& r) {
  if (k >= f.size()) throw DataError("short row at line " + std::to_string(r.line()));
  return f[k];
}

std::vector<CareerYearRaw> read_career_years(const fs::path& path) {
  csv::Reader r(path);
  const auto ri = r.column("researcher_id"), di = r.column("discipline"), yi = r.column("year"), pi = r.column("p"),
             ii = r.column("i"), ai = r.column("career_age");
  std::vector<CareerYearRaw> out;
  std::vector<std::string> f;
  while (r.next(f))
    out.push_back({text_field(f, ri, r), text_field(f, di, r), int_field(f, yi, r), int_field(f, pi, r),
                   double_field(f, ii, r), int_field(f, ai, r)});
  return out;
}

ArticlePools read_pools(const fs::path& path) {
  csv::Reader r(path);
  const auto di = r.column("discipline"), yi = r.column("year"), vi = r.column("value");
  ArticlePools pools;
  std::vector<std::string> f;
  while (r.next(f)) pools[{text_field(f, di, r), int_field(f, yi, r)}].push_back(double_field(f, vi, r));
  for (auto& [k, v] : pools) std::sort(v.begin(), v.end());
  return pools;
}

std::vector<CareerYear> read_scores(const fs::path& path) {
  csv::Reader r(path);
  const auto ri = r.column("researcher_id"), di = r.column("discipline"), yi = r.column("year"), pi = r.column("p"),
             ii = r.column("i"), ai = r.column("career_age"), Pi = r.column("P"), Ii = r.column("I");
  std::vector<CareerYear> out;
  std::vector<std::string> f;
  while (r.next(f)) {
    CareerYear cy;
    static_cast<CareerYearRaw&>(cy) = {text_field(f, ri, r), text_field(f, di, r), int_field(f, yi, r),
                                       int_field(f, pi, r),  double_field(f, ii, r), int_field(f, ai, r)};
    cy.P = double_field(f, Pi, r);
    cy.I = double_field(f, Ii, r);
    out.push_back(std::move(cy));
  }
  return out;
}

std::vector<std::string> disciplines_of(const std::vector<LabeledCareer>& careers) {
  std::set<std::string> s;
  for (const auto& c : careers) s.insert(c.discipline);
  return {s.begin(), s.end()};
}

std::string matrix_csv(const SectorMatrix& m) {
  std::ostringstream s;
  s << "from";
  for (Sector to : kAllSectors) s << ',' << sector_name(to);
  s << '\n';
  for (Sector from : kAllSectors) {
    s << sector_name(from);
    for (Sector to : kAllSectors) {
      const double v = m(static_cast<Eigen::Index>(index(from)), static_cast<Eigen::Index>(index(to)));
      s << ',' << (std::isfinite(v) ? fmt(v) : std::string("NA"));
    }
    s << '\n';
  }
  return s.str();
}

std::vector<std::string> sector_labels() {
  std::vector<std::string> v;
  for (Sector s : kAllSectors) v.emplace_back(sector_name(s));
  return v;
}

ordered_json fit_json(const LogisticFit& f) {
  return {{"intercept", f.intercept}, {"intercept_se", f.intercept_se}, {"intercept_p", f.intercept_p},
          {"slope", f.slope},         {"slope_se", f.slope_se},         {"slope_p", f.slope_p},
          {"log_likelihood", f.log_likelihood}, {"n", f.n}, {"iterations", f.iterations},
          {"converged", f.converged}, {"diagnostic", f.diagnostic}};
}

// ---- stages -----------------------------------------------------------------

void stage_synth(const RunConfig& c) {
  Manifest m(Stage::Synth, c);
  SynthConfig sc = c.synth;
  sc.seed = c.seed;
  sc.year_from = c.year_from;
  sc.year_to = c.year_to;
  const auto corpus = generate_corpus(sc);
  const fs::path dir = stage_dir(c, Stage::Synth);
  fs::create_directories(dir);
  write_corpus(corpus, dir);
  for (const char* f : {"publications.csv", "metrics.csv", "meta.csv", "ground_truth.json"}) {
    const auto text = read_text(dir / f);
    m.output(dir / f, text);
  }
  m.output(dir / "synth_config.json", synth_config_to_json(sc) + "\n");
  m.write();
}

void stage_ingest(const RunConfig& c) {
  Manifest m(Stage::Ingest, c);
  auto input = [&](const fs::path& given, const char* file) {
    if (!given.empty()) {
      m.input(given);
      return given;
    }
    return m.upstream(Stage::Synth, file);
  };
  const auto pub_path = input(c.publications, "publications.csv");
  const auto met_path = input(c.metrics, "metrics.csv");
  const auto meta_path = input(c.meta, "meta.csv");

  const YearWindow window{c.year_from, c.year_to};
  auto pubs = load_publications(pub_path, window);
  auto meta = load_meta(meta_path);
  ValidationReport metric_report;
  const auto metrics = load_metrics(met_path, &metric_report);
  const std::size_t removed = deduplicate(pubs.records);
  const auto joined = join_metrics(pubs.records, metrics);
  const auto build = build_career_years(joined.records, meta.records);
  const auto filtered = filter_disciplines(build.years, c.min_researchers, window);
  const auto kept = filtered.kept();

  const fs::path dir = stage_dir(c, Stage::Ingest);
  CsvOut years_csv{"researcher_id", "discipline", "year", "p", "i", "career_age"};
  for (const auto& y : filtered.years)
    years_csv.row({y.researcher_id, y.discipline, std::to_string(y.year), std::to_string(y.p), fmt(y.i),
                   std::to_string(y.career_age)});
  m.output(dir / "career_years.csv", years_csv.str());

  CsvOut pools_csv{"discipline", "year", "value"};
  const std::set<std::string> kept_set(kept.begin(), kept.end());
  for (const auto& [cell, values] : build.pools)
    if (kept_set.count(cell.discipline) && window.contains(cell.year))
      for (double v : values) pools_csv.row({cell.discipline, std::to_string(cell.year), fmt(v)});
  m.output(dir / "pools.csv", pools_csv.str());

  CsvOut cov_csv{"discipline", "min_researchers_in_year", "worst_year", "kept"};
  for (const auto& d : filtered.coverage)
    cov_csv.row({d.discipline, std::to_string(d.min_researchers_in_year), std::to_string(d.worst_year),
                 d.kept ? "true" : "false"});
  m.output(dir / "coverage.csv", cov_csv.str());

  CsvOut trend_csv{"group", "p_per_decade", "p_se", "i_per_decade", "i_se", "n_years"};
  std::vector<std::string> groups{""};
  groups.insert(groups.end(), kept.begin(), kept.end());
  for (const auto& g : groups) {
    try {
      const auto t = inflation_trend(filtered.years, g);
      trend_csv.row({g.empty() ? "all" : g, fmt(t.p_per_decade), fmt(t.p_se), fmt(t.i_per_decade), fmt(t.i_se),
                     std::to_string(t.n_years)});
    } catch (const NumericalError&) {
    }
  }
  m.output(dir / "inflation.csv", trend_csv.str());

  auto report_json = [](const ValidationReport& r) {
    ordered_json j{{"source", fs::path(r.source).filename().string()}, {"rows_read", r.rows_read}};
    j["rejections"] = ordered_json::array();
    for (const auto& x : r.rejections) j["rejections"].push_back({{"line", x.line}, {"reason", x.reason}});
    j["warnings"] = r.warnings;
    return j;
  };
  ordered_json v;
  v["publications"] = report_json(pubs.report);
  v["meta"] = report_json(meta.report);
  v["metrics"] = report_json(metric_report);
  v["duplicates_removed"] = removed;
  v["articles"] = joined.records.size();
  v["matched_articles"] = joined.matched;
  v["match_rate"] = joined.match_rate();
  v["dropped_missing_meta"] = build.dropped_missing_meta;
  v["career_years"] = build.years.size();
  v["kept_disciplines"] = kept;
  v["warnings"] = build.warnings;
  for (const auto& w : filtered.warnings) v["warnings"].push_back(w);
  m.output(dir / "validation.json", v.dump(2) + "\n");
  m.write();
}

void stage_normalize(const RunConfig& c) {
  Manifest m(Stage::Normalize, c);
  const auto years = read_career_years(m.upstream(Stage::Ingest, "career_years.csv"));
  const auto pools = read_pools(m.upstream(Stage::Ingest, "pools.csv"));
  const fs::path dir = stage_dir(c, Stage::Normalize);

  NormalizeOptions opt;
  opt.n_realizations = c.realizations;
  opt.seed = c.seed;
  opt.null.sampling = c.null_sampling;
  opt.null.estimator = c.null_estimator;
  const NullCacheKey key{corpus_fingerprint(pools), c.seed, c.realizations, c.null_sampling, c.null_estimator};
  const fs::path cache = c.out / "cache" / "prestige_nulls.json";
  const auto cached = load_null_cache(cache, key);
  if (cached) opt.cached_nulls = &*cached;
  const auto res = normalize_corpus(years, pools, opt);
  fs::create_directories(cache.parent_path());
  save_null_cache(cache, key, res.nulls);

  CsvOut scores{"researcher_id", "discipline", "year", "p", "i", "career_age", "P", "I"};
  for (const auto& y : res.years)
    scores.row({y.researcher_id, y.discipline, std::to_string(y.year), std::to_string(y.p), fmt(y.i),
                std::to_string(y.career_age), fmt(y.P), fmt(y.I)});
  m.output(dir / "scores.csv", scores.str());

  CsvOut prod{"discipline", "year", "location", "scale", "converged"};
  for (const auto& [cell, e] : res.productivity)
    prod.row({cell.discipline, std::to_string(cell.year), fmt(e.location), fmt(e.scale), e.converged ? "true" : "false"});
  m.output(dir / "productivity_norms.csv", prod.str());

  CsvOut nulls{"discipline", "year", "p", "location", "scale"};
  for (const auto& [k, n] : res.nulls)
    nulls.row({k.discipline, std::to_string(k.year), std::to_string(k.p), fmt(n.location), fmt(n.scale)});
  m.output(dir / "prestige_nulls.csv", nulls.str());

  ordered_json s{{"scored_years", res.years.size()},
                 {"excluded_years", res.excluded_years},
                 {"realizations", res.n_realizations}};
  s["degenerate_cells"] = ordered_json::array();
  for (const auto& cell : res.degenerate_cells) s["degenerate_cells"].push_back({cell.discipline, cell.year});
  s["degenerate_nulls"] = ordered_json::array();
  for (const auto& k : res.degenerate_nulls) s["degenerate_nulls"].push_back({k.discipline, k.year, k.p});
  m.output(dir / "summary.json", s.dump(2) + "\n");
  m.write();
}

std::vector<LabeledCareer> labeled_from_scores(Manifest& m, const RunConfig& c, std::vector<CareerYear>* keep = nullptr) {
  auto scores = read_scores(m.upstream(Stage::Normalize, "scores.csv"));
  auto careers = label_careers(scores, c.tau);
  if (keep) *keep = std::move(scores);
  return careers;
}

std::string category_name(const ResearcherCategory& cat) {
  if (cat.non_outlier()) return "non_outlier";
  if (cat.exclusively_perfectionist()) return "exclusively_perfectionist";
  if (cat.exclusively_hyperprolific()) return "exclusively_hyperprolific";
  return "both";
}

void stage_classify(const RunConfig& c) {
  Manifest m(Stage::Classify, c);
  std::vector<CareerYear> scores;
  const auto careers = labeled_from_scores(m, c, &scores);
  const fs::path dir = stage_dir(c, Stage::Classify);

  CsvOut plane{"researcher_id", "discipline", "year", "career_age", "P", "I", "sector"};
  for (const auto& y : scores)
    plane.row({y.researcher_id, y.discipline, std::to_string(y.year), std::to_string(y.career_age), fmt(y.P), fmt(y.I),
               std::string(sector_name(classify_sector(y.I, y.P, c.tau)))});
  m.output(dir / "plane.csv", plane.str());

  CsvOut cats{"researcher_id", "discipline", "career_length", "perfectionist", "hyperprolific",
              "hyperprolific_perfectionist", "category"};
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  for (const auto& lc : careers) {
    const auto cat = categorize_researcher(lc.sectors);
    cats.row({lc.researcher_id, lc.discipline, std::to_string(lc.career_length), b(cat.perfectionist),
              b(cat.hyperprolific), b(cat.hyperprolific_perfectionist), category_name(cat)});
  }
  m.output(dir / "categories.csv", cats.str());

  auto venn_json = [](const VennCounts& v) {
    ordered_json j{{"researchers", v.researchers},
                   {"non_outlier", v.non_outlier},
                   {"only_ipp", v.only_ipp},
                   {"only_ppp", v.only_ppp},
                   {"only_ippp", v.only_ippp},
                   {"ipp_ppp", v.ipp_ppp},
                   {"ipp_ippp", v.ipp_ippp},
                   {"ppp_ippp", v.ppp_ippp},
                   {"all_three", v.all_three},
                   {"perfectionist_total", v.perfectionist_total},
                   {"hyperprolific_total", v.hyperprolific_total},
                   {"hyperprolific_perfectionist_total", v.hyperprolific_perfectionist_total},
                   {"exclusively_perfectionist", v.exclusively_perfectionist},
                   {"exclusively_hyperprolific", v.exclusively_hyperprolific},
                   {"both_non_simultaneous", v.both_non_simultaneous},
                   {"outlier_year_fraction", v.outlier_year_fraction},
                   {"outlier_researcher_fraction", v.outlier_researcher_fraction},
                   {"single_outlier_year_fraction", v.single_outlier_year_fraction},
                   {"majority_outlier_years_fraction", v.majority_outlier_years_fraction}};
    ordered_json sy;
    for (Sector s : kAllSectors) sy[std::string(sector_name(s))] = v.sector_years[index(s)];
    j["sector_years"] = sy;
    return j;
  };
  ordered_json venn;
  venn["all"] = venn_json(venn_counts(careers));
  for (const auto& d : disciplines_of(careers)) {
    std::vector<LabeledCareer> sub;
    for (const auto& lc : careers)
      if (lc.discipline == d) sub.push_back(lc);
    venn[d] = venn_json(venn_counts(sub));
  }
  m.output(dir / "venn.json", venn.dump(2) + "\n");

  CsvOut ext{"researcher_id", "discipline", "year", "P", "I", "sector"};
  for (const auto& e : extreme_hyperprolific(scores, kExtremeProductivity, c.tau))
    ext.row({e.researcher_id, e.discipline, std::to_string(e.year), fmt(e.P), fmt(e.I), std::string(sector_name(e.sector))});
  m.output(dir / "extreme_hyperprolific.csv", ext.str());

  std::vector<svg::Point> pts;
  for (const auto& y : scores) pts.push_back({y.P, y.I});
  m.output(dir / "plane.svg", svg::sector_scatter(pts, c.tau, "Journal prestige vs productivity"));
  m.write();
}

void stage_transitions(const RunConfig& c) {
  Manifest m(Stage::Transitions, c);
  const auto careers = labeled_from_scores(m, c);
  const auto groups = split_by_outlier_group(careers);
  const fs::path dir = stage_dir(c, Stage::Transitions);
  ordered_json summary;
  for (const auto& [name, group] : {std::pair<std::string, const std::vector<LabeledCareer>*>{"outlier", &groups.outlier},
                                    {"non_outlier", &groups.non_outlier}}) {
    const auto observed = count_transitions(*group, c.gap_policy);
    const auto null = shuffle_null(*group, c.shuffles, substream_seed(c.seed, std::string_view("transitions"), name),
                                   c.gap_policy);
    const auto ex = excess_matrix(observed, null);
    m.output(dir / (name + "_observed.csv"), matrix_csv(ex.observed));
    m.output(dir / (name + "_null_mean.csv"), matrix_csv(ex.null_mean));
    m.output(dir / (name + "_null_sd.csv"), matrix_csv(ex.null_sd));
    m.output(dir / (name + "_excess.csv"), matrix_csv(ex.excess));
    m.output(dir / (name + "_z.csv"), matrix_csv(ex.z));
    m.output(dir / (name + "_excess.svg"),
             svg::heatmap(ex.excess, sector_labels(), sector_labels(), "Transition excess, " + name + " researchers"));
    summary[name] = {{"researchers", group->size()}, {"transitions", ex.observed.sum()}, {"shuffles", ex.n_shuffles}};
  }
  summary["gap_policy"] = gap_name(c.gap_policy);
  m.output(dir / "summary.json", summary.dump(2) + "\n");
  m.write();
}

void stage_entropy(const RunConfig& c) {
  Manifest m(Stage::Entropy, c);
  const auto careers = labeled_from_scores(m, c);
  const fs::path dir = stage_dir(c, Stage::Entropy);
  CsvOut rows{"researcher_id", "discipline", "group", "entropy"};
  std::map<std::string, std::vector<double>> values;
  for (const auto& lc : careers) {
    const auto prof = occupation_profile(lc);
    const auto cat = categorize_researcher(lc.sectors);
    auto add = [&](const std::string& group, std::span<const Sector> subset) {
      if (const auto h = sector_entropy(prof, subset)) {
        rows.row({lc.researcher_id, lc.discipline, group, fmt(*h)});
        values[group].push_back(*h);
      }
    };
    int distinct_outlier = 0;
    for (Sector s : kOutlierSectors) distinct_outlier += prof.fractions[index(s)] > 0.0;
    if (distinct_outlier >= 2) add("outlier_sectors", kOutlierSectors);
    if (cat.perfectionist && cat.hyperprolific) add("single_outlier_sectors", kSingleOutlierSectors);
    if (cat.non_outlier()) add("non_outlier_sectors", kNonOutlierSectors);
  }
  m.output(dir / "entropy.csv", rows.str());

  ordered_json s;
  std::vector<svg::Ridge> ridges;
  for (auto& [group, v] : values) {
    std::sort(v.begin(), v.end());
    s[group] = {{"n", v.size()}, {"mean", sample_mean(v)}, {"median", quantile_sorted(v, 0.5)}};
    if (v.size() >= 2) {
      const auto d = kernel_density(Eigen::Map<const Eigen::MatrixXd>(v.data(), static_cast<Eigen::Index>(v.size()), 1));
      ridges.push_back({group, d.x, d.y});
    }
  }
  m.output(dir / "summary.json", s.dump(2) + "\n");
  m.output(dir / "entropy.svg", svg::ridgeline(ridges, "normalized entropy", "Sector occupation entropy"));
  m.write();
}

void stage_logistic(const RunConfig& c) {
  Manifest m(Stage::Logistic, c);
  std::vector<CareerYear> scores;
  const auto careers = labeled_from_scores(m, c, &scores);
  const fs::path dir = stage_dir(c, Stage::Logistic);
  const auto outcomes = outlier_outcomes(careers);

  ordered_json fits;
  std::vector<std::string> groups{"all"};
  for (const auto& d : disciplines_of(careers)) groups.push_back(d);
  for (const auto& g : groups) {
    std::vector<OutlierOutcome> sub;
    for (const auto& o : outcomes)
      if (g == "all" || o.discipline == g) sub.push_back(o);
    ordered_json entry{{"outlier_researchers", sub.size()}};
    auto attempt = [&](const char* key, auto&& fn) {
      try {
        entry[key] = fit_json(fn(sub));
      } catch (const std::invalid_argument& e) {
        entry[key] = {{"error", e.what()}};
      }
    };
    attempt("perfectionist_vs_length", perfectionist_vs_length);
    attempt("perfectionist_vs_outlier_years", perfectionist_vs_outlier_years);
    fits[g] = entry;
  }
  m.output(dir / "fits.json", fits.dump(2) + "\n");

  // Group contrasts: researchers outlying in both dimensions vs exclusive ones.
  std::map<std::string, std::string> cat_of;
  for (const auto& lc : careers) cat_of[lc.discipline + '\x1f' + lc.researcher_id] = category_name(categorize_researcher(lc.sectors));
  auto values = [&](const std::string& category, bool productivity) {
    std::vector<double> v;
    std::map<std::string, std::pair<double, int>> per_researcher;
    for (const auto& y : scores) {
      const auto key = y.discipline + '\x1f' + y.researcher_id;
      if (cat_of.at(key) != category) continue;
      const double x = productivity ? y.P : y.I;
      if (c.permutation_unit == PermutationUnit::ResearcherYear) {
        v.push_back(x);
      } else {
        auto& acc = per_researcher[key];
        acc.first += x;
        ++acc.second;
      }
    }
    for (const auto& [k, acc] : per_researcher) v.push_back(acc.first / acc.second);
    return v;
  };
  ordered_json tests = ordered_json::array();
  int test_index = 0;
  for (const char* other : {"exclusively_hyperprolific", "exclusively_perfectionist"}) {
    for (bool productivity : {true, false}) {
      const auto a = values("both", productivity), b = values(other, productivity);
      ordered_json t{{"group_a", "both"}, {"group_b", other}, {"score", productivity ? "P" : "I"},
                     {"unit", unit_name(c.permutation_unit)}, {"n_a", a.size()}, {"n_b", b.size()}};
      if (a.size() >= 2 && b.size() >= 2) {
        const auto seed = substream_seed(c.seed, std::string_view("group-test"), test_index);
        const auto pr = permutation_test(a, b, c.permutations, seed);
        const auto ca = bootstrap_ci(a, c.bootstrap, 0.95, substream_seed(seed, std::string_view("ci-a")));
        const auto cb = bootstrap_ci(b, c.bootstrap, 0.95, substream_seed(seed, std::string_view("ci-b")));
        t["mean_a"] = sample_mean(a);
        t["ci_a"] = {ca.lo, ca.hi};
        t["mean_b"] = sample_mean(b);
        t["ci_b"] = {cb.lo, cb.hi};
        t["difference"] = pr.observed;
        t["p_value"] = pr.p_value;
        t["permutations"] = pr.n_permutations;
      } else {
        t["error"] = "fewer than two values in a group";
      }
      tests.push_back(t);
      ++test_index;
    }
  }
  m.output(dir / "group_tests.json", tests.dump(2) + "\n");

  CsvOut oc{"researcher_id", "discipline", "career_length", "productivity_outlier_years", "perfectionist"};
  for (const auto& o : outcomes)
    oc.row({o.researcher_id, o.discipline, std::to_string(o.career_length), std::to_string(o.productivity_outlier_years),
            o.perfectionist ? "1" : "0"});
  m.output(dir / "outlier_outcomes.csv", oc.str());
  m.write();
}

void stage_career(const RunConfig& c) {
  Manifest m(Stage::Career, c);
  std::vector<CareerYear> scores;
  const auto careers = labeled_from_scores(m, c, &scores);
  const fs::path dir = stage_dir(c, Stage::Career);

  TrendOptions to;
  to.alignment = c.window;
  to.n_resamples = c.bootstrap;
  to.seed = substream_seed(c.seed, std::string_view("career-trends"));
  const auto trends = sliding_window_trends(scores, to);
  CsvOut tc{"discipline", "age", "meanP", "loP", "hiP", "meanI", "loI", "hiI", "n"};
  std::vector<svg::Band> p_bands, i_bands;
  for (const auto& [d, series] : trends) {
    svg::Band bp{d, {}, {}, {}, {}}, bi{d, {}, {}, {}, {}};
    for (const auto& t : series) {
      tc.row({d, std::to_string(t.age), fmt(t.mean_P), fmt(t.lo_P), fmt(t.hi_P), fmt(t.mean_I), fmt(t.lo_I),
              fmt(t.hi_I), std::to_string(t.n)});
      bp.x.push_back(t.age), bp.mean.push_back(t.mean_P), bp.lo.push_back(t.lo_P), bp.hi.push_back(t.hi_P);
      bi.x.push_back(t.age), bi.mean.push_back(t.mean_I), bi.lo.push_back(t.lo_I), bi.hi.push_back(t.hi_I);
    }
    p_bands.push_back(std::move(bp));
    i_bands.push_back(std::move(bi));
  }
  m.output(dir / "trends.csv", tc.str());
  m.output(dir / "trends_P.svg", svg::trend_bands(p_bands, "career age", "P", "Productivity over career age"));
  m.output(dir / "trends_I.svg", svg::trend_bands(i_bands, "career age", "I", "Journal prestige over career age"));

  CsvOut occ{"discipline", "interval", "first_age", "last_age", "contributors", "sector", "fraction"};
  for (const auto& [d, om] : occupancy_matrix(careers)) {
    std::vector<std::string> cols;
    for (std::size_t k = 0; k < om.intervals.size(); ++k) {
      const int mth = om.intervals[k];
      cols.push_back(std::to_string(5 * mth + 1) + "-" + std::to_string(5 * mth + 5));
      for (Sector s : kAllSectors)
        occ.row({d, std::to_string(mth), std::to_string(5 * mth + 1), std::to_string(5 * mth + 5),
                 std::to_string(om.contributors[k]), std::string(sector_name(s)),
                 fmt(om.fractions(static_cast<Eigen::Index>(index(s)), static_cast<Eigen::Index>(k)))});
    }
    m.output(dir / ("occupancy_" + d + ".svg"), svg::heatmap(om.fractions, sector_labels(), cols, "Sector occupancy, " + d));
  }
  m.output(dir / "occupancy.csv", occ.str());
  m.write();
}

void stage_bayes(const RunConfig& c) {
  Manifest m(Stage::Bayes, c);
  const auto scores = read_scores(m.upstream(Stage::Normalize, "scores.csv"));
  const fs::path dir = stage_dir(c, Stage::Bayes);
  const auto sel = select_bayes_sample(scores, c.tau);

  ordered_json summary;
  summary["warnings"] = sel.warnings;
  CsvOut draws{"discipline", "model", "chain", "iteration", "parameter", "value"};
  CsvOut dens{"discipline", "model", "parameter", "x", "density"};
  std::vector<svg::Ridge> ridges;
  for (const auto& [d, data] : sel.disciplines) {
    for (bool age : {false, true}) {
      const std::string model = age ? "with_age" : "without_age";
      HierarchicalModelSpec spec;
      spec.include_age = age;
      spec.chains = c.chains;
      spec.iterations = c.iterations;
      spec.burn_in = c.burn_in;
      spec.keep_individual = false;
      const auto samples = fit_hierarchical(data, spec, substream_seed(c.seed, std::string_view("bayes"), d, model));
      const auto post = posterior_summary(samples);
      ordered_json mj{{"researchers", data.researchers.size()}, {"observations", data.rows()},
                      {"converged", post.converged()}, {"epsilon_near_zero", post.epsilon_near_zero}};
      for (const auto& p : post.group)
        mj["parameters"][p.name] = {{"mean", p.mean}, {"sd", p.sd},     {"lo", p.lo},     {"hi", p.hi},
                                    {"rhat", p.rhat}, {"ess", p.ess},   {"mcse", p.mcse}, {"rhat_degenerate", p.rhat_degenerate}};
      summary["disciplines"][d][model] = mj;

      for (std::size_t k = 0; k < samples.group_names.size(); ++k) {
        const auto& name = samples.group_names[k];
        const auto mat = samples.group_draws(name);
        for (Eigen::Index ch = 0; ch < mat.cols(); ++ch)
          for (Eigen::Index it = 0; it < mat.rows(); ++it)
            draws.row({d, model, std::to_string(ch), std::to_string(samples.burn_in + it), name, fmt(mat(it, ch))});
      }
      for (const auto& [param, density] : post.densities) {
        for (std::size_t q = 0; q < density.x.size(); ++q) dens.row({d, model, param, fmt(density.x[q]), fmt(density.y[q])});
        if (param == "mu_P") ridges.push_back({d + " (" + model + ")", density.x, density.y});
      }
    }
  }
  m.output(dir / "summary.json", summary.dump(2) + "\n");
  m.output(dir / "draws.csv", draws.str());
  m.output(dir / "densities.csv", dens.str());
  m.output(dir / "mu_P.svg", svg::ridgeline(ridges, "mu_P", "Posterior of the productivity effect"));
  m.write();
}

void stage_report(const RunConfig& c) {
  Manifest m(Stage::Report, c);
  const fs::path dir = stage_dir(c, Stage::Report);
  struct Item {
    Stage stage;
    const char* file;
    const char* as;
  };
  const Item items[] = {
      {Stage::Ingest, "inflation.csv", "inflation.csv"},
      {Stage::Ingest, "coverage.csv", "coverage.csv"},
      {Stage::Classify, "plane.svg", "fig1a_plane.svg"},
      {Stage::Classify, "venn.json", "fig1b_venn.json"},
      {Stage::Logistic, "fits.json", "fig1c_logistic.json"},
      {Stage::Logistic, "group_tests.json", "group_tests.json"},
      {Stage::Entropy, "entropy.svg", "fig1d_entropy.svg"},
      {Stage::Entropy, "entropy.csv", "entropy.csv"},
      {Stage::Transitions, "outlier_excess.svg", "fig1e_transitions_outlier.svg"},
      {Stage::Transitions, "non_outlier_excess.svg", "fig1e_transitions_non_outlier.svg"},
      {Stage::Transitions, "outlier_excess.csv", "transitions_outlier_excess.csv"},
      {Stage::Transitions, "non_outlier_excess.csv", "transitions_non_outlier_excess.csv"},
      {Stage::Career, "trends_P.svg", "fig2_trends_P.svg"},
      {Stage::Career, "trends_I.svg", "fig2_trends_I.svg"},
      {Stage::Career, "trends.csv", "trends.csv"},
      {Stage::Career, "occupancy.csv", "fig3_occupancy.csv"},
      {Stage::Bayes, "mu_P.svg", "fig4_mu_P.svg"},
      {Stage::Bayes, "summary.json", "fig4_bayes_summary.json"},
      {Stage::Bayes, "densities.csv", "fig4_densities.csv"},
  };
  ordered_json index = ordered_json::array();
  for (const auto& it : items) {
    const auto src = m.upstream(it.stage, it.file);
    m.output(dir / it.as, read_text(src));
    index.push_back({{"file", it.as}, {"source", std::string(stage_name(it.stage)) + "/" + it.file}});
  }
  const fs::path career = stage_dir(c, Stage::Career);
  std::vector<fs::path> occ;
  for (const auto& e : fs::directory_iterator(career))
    if (e.path().filename().string().rfind("occupancy_", 0) == 0 && e.path().extension() == ".svg") occ.push_back(e.path());
  std::sort(occ.begin(), occ.end());
  for (const auto& p : occ) {
    m.input(p);
    const auto as = "fig3_" + p.filename().string();
    m.output(dir / as, read_text(p));
    index.push_back({{"file", as}, {"source", "career/" + p.filename().string()}});
  }
  m.output(dir / "index.json", index.dump(2) + "\n");
  m.write();
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](long long v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string("config: ") + name + " must be >= 1");
  };
  positive(realizations, "realizations");
  positive(shuffles, "shuffles");
  positive(permutations, "permutations");
  positive(bootstrap, "bootstrap");
  positive(chains, "chains");
  positive(iterations, "iters");
  positive(min_researchers, "min_researchers");
  if (burn_in < 0 || burn_in >= iterations) throw std::invalid_argument("config: burn-in must lie in [0, iters)");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("config: tau must be positive");
  if (year_to < year_from) throw std::invalid_argument("config: year_to precedes year_from");
  if (out.empty()) throw std::invalid_argument("config: empty output directory");
}

std::string RunConfig::settings_json() const {
  ordered_json j{{"realizations", realizations},
                 {"shuffles", shuffles},
                 {"permutations", permutations},
                 {"bootstrap", bootstrap},
                 {"tau", tau},
                 {"chains", chains},
                 {"iters", iterations},
                 {"burn_in", burn_in},
                 {"null_replacement", sampling_name(null_sampling)},
                 {"null_estimator", estimator_name(null_estimator)},
                 {"gap_policy", gap_name(gap_policy)},
                 {"window", window_name(window)},
                 {"perm_unit", unit_name(permutation_unit)},
                 {"min_researchers", min_researchers},
                 {"year_from", year_from},
                 {"year_to", year_to},
                 {"threads", threads}};
  return j.dump();
}

RunConfig run_config_from_json(const std::string& text, RunConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  try {
    auto get = [&](const char* key, auto& out) {
      if (j.contains(key)) out = j.at(key).get<std::remove_reference_t<decltype(out)>>();
    };
    std::string s;
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("publications")) c.publications = j.at("publications").get<std::string>();
    if (j.contains("metrics")) c.metrics = j.at("metrics").get<std::string>();
    if (j.contains("meta")) c.meta = j.at("meta").get<std::string>();
    get("seed", c.seed);
    get("threads", c.threads);
    get("realizations", c.realizations);
    get("shuffles", c.shuffles);
    get("permutations", c.permutations);
    get("bootstrap", c.bootstrap);
    get("tau", c.tau);
    get("chains", c.chains);
    get("iters", c.iterations);
    get("burn_in", c.burn_in);
    get("min_researchers", c.min_researchers);
    get("year_from", c.year_from);
    get("year_to", c.year_to);
    if (j.contains("null_replacement"))
      c.null_sampling = parse_choice<Sampling>("null_replacement", j.at("null_replacement").get<std::string>(),
                                               {{"with", Sampling::WithReplacement}, {"without", Sampling::WithoutReplacement}});
    if (j.contains("null_estimator"))
      c.null_estimator = parse_choice<NullEstimator>("null_estimator", j.at("null_estimator").get<std::string>(),
                                                     {{"huber", NullEstimator::Huber}, {"moments", NullEstimator::Moments}});
    if (j.contains("gap_policy"))
      c.gap_policy = parse_choice<GapPolicy>("gap_policy", j.at("gap_policy").get<std::string>(),
                                             {{"break", GapPolicy::Break}, {"bridge", GapPolicy::Bridge}});
    if (j.contains("window"))
      c.window = parse_choice<WindowAlignment>("window", j.at("window").get<std::string>(),
                                               {{"centered", WindowAlignment::Centered}, {"trailing", WindowAlignment::Trailing}});
    if (j.contains("perm_unit"))
      c.permutation_unit = parse_choice<PermutationUnit>(
          "perm_unit", j.at("perm_unit").get<std::string>(),
          {{"researcher-year", PermutationUnit::ResearcherYear}, {"researcher", PermutationUnit::Researcher}});
    if (j.contains("synth")) c.synth = synth_config_from_json(j.at("synth").dump());
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

std::string_view stage_name(Stage s) noexcept {
  switch (s) {
    case Stage::Synth: return "synth";
    case Stage::Ingest: return "ingest";
    case Stage::Normalize: return "normalize";
    case Stage::Classify: return "classify";
    case Stage::Transitions: return "transitions";
    case Stage::Entropy: return "entropy";
    case Stage::Logistic: return "logistic";
    case Stage::Career: return "career";
    case Stage::Bayes: return "bayes";
    case Stage::Report: return "report";
  }
  return "unknown";
}

std::optional<Stage> stage_from_name(std::string_view name) noexcept {
  for (Stage s : kAllStages)
    if (stage_name(s) == name) return s;
  return std::nullopt;
}

void run_stage(Stage stage, const RunConfig& config) {
  config.validate();
  set_thread_limit(config.threads);
  switch (stage) {
    case Stage::Synth: return stage_synth(config);
    case Stage::Ingest: return stage_ingest(config);
    case Stage::Normalize: return stage_normalize(config);
    case Stage::Classify: return stage_classify(config);
    case Stage::Transitions: return stage_transitions(config);
    case Stage::Entropy: return stage_entropy(config);
    case Stage::Logistic: return stage_logistic(config);
    case Stage::Career: return stage_career(config);
    case Stage::Bayes: return stage_bayes(config);
    case Stage::Report: return stage_report(config);
  }
}

void run_all(const RunConfig& config) {
  const bool explicit_inputs = !config.publications.empty();
  for (Stage s : kAllStages) {
    if (s == Stage::Synth && explicit_inputs) continue;
    run_stage(s, config);
  }
}

std::string sha256_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest initialisation failed");
  }
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof buf);
    if (f.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(f.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

std::vector<fs::path> data_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name == "manifest.json" || e.path().extension() == ".svg") continue;
    out.push_back(fs::relative(e.path(), dir));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace scimetric
