#pragma once

// Inflation- and size-corrected standard scores of productivity (P) and
// journal prestige (I).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scimetric/corpus.hpp"
#include "scimetric/rng.hpp"
#include "scimetric/robust.hpp"

namespace scimetric {

enum class Sampling { WithReplacement, WithoutReplacement };
enum class NullEstimator { Huber, Moments };

struct NullOptions {
  Sampling sampling = Sampling::WithReplacement;
  NullEstimator estimator = NullEstimator::Huber;
  HuberOptions huber{};
};

struct NullMoments {
  double location = 0.0;
  double scale = 0.0;
  friend bool operator==(const NullMoments&, const NullMoments&) = default;
};

// P = (p - location) / scale. Throws DegenerateError when scale == 0.
double productivity_zscore(double p, const LocationScale<double>& norm);

// Location and scale of the mean metric of `p` articles drawn from `pool`,
// over `n_realizations` independent draws.
NullMoments prestige_null(std::span<const double> pool, int p, int n_realizations, Engine& rng,
                          const NullOptions& options = {});

// I = (i - null.location) / null.scale. Throws DegenerateError when scale == 0.
double prestige_zscore(double i, const NullMoments& null);

struct CareerYear : CareerYearRaw {
  double P = 0.0;
  double I = 0.0;
};

struct NullKey {
  std::string discipline;
  int year = 0;
  int p = 0;
  friend auto operator<=>(const NullKey&, const NullKey&) = default;
};

using ProductivityNormTable = std::map<CellKey, LocationScale<double>>;
using PrestigeNullTable = std::map<NullKey, NullMoments>;

struct NormalizeOptions {
  int n_realizations = 1000;
  std::uint64_t seed = 0;
  NullOptions null{};
  // Precomputed null entries (e.g. from a cache file); missing triples are sampled.
  const PrestigeNullTable* cached_nulls = nullptr;
};

struct NormalizeResult {
  std::vector<CareerYear> years;
  ProductivityNormTable productivity;
  PrestigeNullTable nulls;
  int n_realizations = 0;
  std::vector<CellKey> degenerate_cells;
  std::vector<NullKey> degenerate_nulls;
  std::size_t excluded_years = 0;
};

// Scores every career year. Each (discipline, year, p) null is sampled once
// from its own substream of `seed`, so output does not depend on input order
// or thread schedule.
NormalizeResult normalize_corpus(const std::vector<CareerYearRaw>& years, const ArticlePools& pools,
                                 const NormalizeOptions& options = {});

// Identifies a corpus for null-table caching.
std::string corpus_fingerprint(const ArticlePools& pools);

struct NullCacheKey {
  std::string corpus;
  std::uint64_t seed = 0;
  int n_realizations = 0;
  Sampling sampling = Sampling::WithReplacement;
  NullEstimator estimator = NullEstimator::Huber;
  friend bool operator==(const NullCacheKey&, const NullCacheKey&) = default;
};

void save_null_cache(const std::filesystem::path& path, const NullCacheKey& key, const PrestigeNullTable& table);
// Returns nothing when the file is absent or was built under a different key.
std::optional<PrestigeNullTable> load_null_cache(const std::filesystem::path& path, const NullCacheKey& key);

}  // namespace scimetric
