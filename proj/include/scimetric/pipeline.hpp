#pragma once

// Stage orchestration behind the command-line tool. Every stage reads the
// artifacts of its upstream stages from `out/<stage>/`, writes its own, and
// records a manifest with input/output hashes, seed, settings and timing.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scimetric/career.hpp"
#include "scimetric/error.hpp"
#include "scimetric/normalize.hpp"
#include "scimetric/synth.hpp"
#include "scimetric/transitions.hpp"

namespace scimetric {

enum class PermutationUnit { ResearcherYear, Researcher };

struct RunConfig {
  std::filesystem::path out = "out";
  // Ingest inputs; empty means the synth stage's outputs.
  std::filesystem::path publications, metrics, meta;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  int realizations = 1000;
  int shuffles = 10000;
  int permutations = 100000;
  int bootstrap = 10000;
  double tau = kOutlierThreshold;
  int chains = 8;
  int iterations = 10000;
  int burn_in = 5000;
  Sampling null_sampling = Sampling::WithReplacement;
  NullEstimator null_estimator = NullEstimator::Huber;
  GapPolicy gap_policy = GapPolicy::Break;
  WindowAlignment window = WindowAlignment::Centered;
  PermutationUnit permutation_unit = PermutationUnit::ResearcherYear;
  int min_researchers = 50;
  int year_from = 1997;
  int year_to = 2015;
  SynthConfig synth = SynthConfig::defaults();

  // Throws std::invalid_argument on out-of-range settings.
  void validate() const;
  std::string settings_json() const;
};

// Applies the keys present in a JSON document on top of `base`.
RunConfig run_config_from_json(const std::string& text, RunConfig base = {});

enum class Stage { Synth, Ingest, Normalize, Classify, Transitions, Entropy, Logistic, Career, Bayes, Report };

inline constexpr Stage kAllStages[] = {Stage::Synth,       Stage::Ingest,  Stage::Normalize, Stage::Classify,
                                       Stage::Transitions, Stage::Entropy, Stage::Logistic,  Stage::Career,
                                       Stage::Bayes,       Stage::Report};

std::string_view stage_name(Stage s) noexcept;
std::optional<Stage> stage_from_name(std::string_view name) noexcept;

// Missing upstream artifact; the message names the stage that produces it.
class MissingArtifactError : public DataError {
 public:
  using DataError::DataError;
};

void run_stage(Stage stage, const RunConfig& config);

// Synth (unless explicit inputs are configured) followed by every analysis stage.
void run_all(const RunConfig& config);

std::string sha256_file(const std::filesystem::path& path);

// Data files (everything except manifests and SVG plots) under `dir`, relative paths, sorted.
std::vector<std::filesystem::path> data_files(const std::filesystem::path& dir);

}  // namespace scimetric
