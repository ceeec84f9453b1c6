#pragma once

// Synthetic corpora with known ground truth.

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scimetric/bayes.hpp"
#include "scimetric/corpus.hpp"
#include "scimetric/plane.hpp"
#include "scimetric/transitions.hpp"

namespace scimetric {

struct DisciplineConfig {
  std::string name;
  int researchers = 120;
  double base_productivity = 5.0;    // mean articles per year at year_from
  double productivity_sd = 1.8;
  double productivity_drift = 1.57;  // papers per decade
  double metric_log_mean = 0.5;      // journal base metric ~ LogNormal(mean, sd)
  double metric_log_sd = 0.7;
  double metric_drift = 0.72;        // metric units per decade, additive
  int journals = 400;
  // Forces `dropout_fraction` of the researchers inactive in `dropout_year`.
  std::optional<int> dropout_year;
  double dropout_fraction = 0.0;
};

struct HierarchicalTruth {
  double mu_c = 0.0, sigma_c = 0.3;
  double mu_P = -0.2, sigma_P = 0.1;
  double mu_A = 0.0, sigma_A = 0.0;
  double epsilon = 0.8;
};

struct LogisticTruth {
  double intercept = 1.849;
  double slope = -0.051;
};

struct SynthConfig {
  std::vector<DisciplineConfig> disciplines;
  int year_from = 1997;
  int year_to = 2015;
  double gap_rate = 0.03;
  double metric_coverage = 0.9;  // share of emitted (deduplicated) articles with a metric
  double duplicate_rate = 0.01;  // extra duplicate rows, as a share of articles
  double outlier_rate = 0.15;
  double both_rate = 0.15;          // outliers planted in both dimensions
  double simultaneous_rate = 0.5;   // of those, share planted through IPpp years
  double outlier_year_rate = 0.25;  // per active year of an outlier researcher
  int extreme_years = 0;            // IPpp years planted at P ~ 30
  double productivity_persistence = 0.3;
  HierarchicalTruth hierarchy;
  LogisticTruth perfectionist;  // P(perfectionist | L) among outlier researchers
  int null_realizations = 400;
  int refine_passes = 2;
  std::uint64_t seed = 1;

  // Three disciplines with the default settings above.
  static SynthConfig defaults();
  void validate() const;
};

SynthConfig synth_config_from_json(const std::string& text);
std::string synth_config_to_json(const SynthConfig& config);

enum class PlantedCategory { NonOutlier, Perfectionist, Hyperprolific, BothSimultaneous, BothNonSimultaneous };

std::string_view planted_category_name(PlantedCategory c) noexcept;

struct PlantedYear {
  int year = 0;
  int career_age = 0;
  int p = 0;
  double P = 0.0;         // exact, from the final cell estimates
  double I_target = 0.0;  // intended prestige score
  Sector sector = Sector::ImPm;  // classify(I_target, P)
};

struct ResearcherTruth {
  std::string researcher_id;
  std::string discipline;
  int phd_year = 0;
  int career_length = 0;
  PlantedCategory category = PlantedCategory::NonOutlier;
  bool perfectionist = false;
  double c = 0.0, beta = 0.0, gamma = 0.0;
  bool bayes_eligible = false;  // non-outlier and L > 5
  std::vector<PlantedYear> years;
};

struct DisciplineTruth {
  std::map<int, int> active_researchers;  // year -> researchers with >= 1 matched article
  int min_active() const;
};

struct GroundTruth {
  std::vector<ResearcherTruth> researchers;
  std::map<std::string, DisciplineTruth> disciplines;
  std::size_t matched_articles = 0;
  std::size_t unmatched_articles = 0;
  std::size_t duplicate_rows = 0;
  double match_rate() const;
  std::size_t count(PlantedCategory c) const;
  std::size_t extreme_years = 0;
  // Planted prestige-outlier years the journal range could not lift above tau;
  // they are emitted as ordinary years and excluded from the categories.
  std::size_t demoted_years = 0;
};

struct SynthCorpus {
  std::vector<PublicationRecord> publications;
  std::vector<ResearcherMeta> meta;
  JournalMetricTable metrics;
  GroundTruth truth;
};

// Throws DataError for an infeasible configuration before anything is emitted.
SynthCorpus generate_corpus(const SynthConfig& config);

// publications.csv, metrics.csv, meta.csv and ground_truth.json under `dir`.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);
std::string ground_truth_json(const GroundTruth& truth);

// Regression data drawn directly from the hierarchical model, with P ~ N(0, 1)
// and career ages 1..years.
struct HierarchicalDataset {
  RegressionData data;
  Eigen::MatrixXd coefficients;  // researchers x (c, beta, gamma)
};

HierarchicalDataset generate_hierarchical_dataset(const HierarchicalTruth& truth, int researchers, int years,
                                                  std::uint64_t seed);

// Sector careers from a Markov chain; each row of `kernel` is a transition
// distribution, `initial` the first-year distribution.
std::vector<LabeledCareer> generate_sector_careers(const SectorMatrix& kernel,
                                                   const Eigen::Matrix<double, kSectorCount, 1>& initial,
                                                   int researchers, int years, std::uint64_t seed);

// (x, y) with x ~ Uniform{x_min..x_max} and y ~ Bernoulli(logistic(b0 + b1 x)).
struct LogisticSample {
  std::vector<double> x;
  std::vector<int> y;
};

LogisticSample generate_logistic_sample(const LogisticTruth& truth, int n, int x_min, int x_max, std::uint64_t seed);

}  // namespace scimetric
