#include "scimetric/normalize.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "scimetric/csv.hpp"
#include "scimetric/error.hpp"

namespace scimetric {

double productivity_zscore(double p, const LocationScale<double>& norm) {
  if (!(norm.scale > 0.0)) throw DegenerateError("productivity cell has zero scale");
  return (p - norm.location) / norm.scale;
}

double prestige_zscore(double i, const NullMoments& null) {
  if (!(null.scale > 0.0)) throw DegenerateError("prestige null has zero scale");
  return (i - null.location) / null.scale;
}

NullMoments prestige_null(std::span<const double> pool, int p, int n_realizations, Engine& rng,
                          const NullOptions& options) {
  if (pool.empty()) throw DataError("prestige_null: empty article pool");
  if (p < 1) throw std::invalid_argument("prestige_null: p must be >= 1");
  if (n_realizations < 2) throw std::invalid_argument("prestige_null: need at least 2 realizations");
  const bool replace = options.sampling == Sampling::WithReplacement;
  if (!replace && static_cast<std::size_t>(p) > pool.size())
    throw DataError("prestige_null: p exceeds pool size for sampling without replacement");

  std::vector<double> means(static_cast<std::size_t>(n_realizations));
  std::vector<std::size_t> index;
  if (!replace) {
    index.resize(pool.size());
    std::iota(index.begin(), index.end(), std::size_t{0});
  }
  for (auto& m : means) {
    double sum = 0.0;
    if (replace) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (int k = 0; k < p; ++k) sum += pool[pick(rng)];
    } else {
      // Partial Fisher-Yates over a persistent index permutation.
      for (int k = 0; k < p; ++k) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), pool.size() - 1);
        std::swap(index[static_cast<std::size_t>(k)], index[pick(rng)]);
        sum += pool[index[static_cast<std::size_t>(k)]];
      }
    }
    m = sum / p;
  }
  const auto est = options.estimator == NullEstimator::Huber
                       ? huber_location_scale(std::span<const double>(means), options.huber)
                       : moment_location_scale(std::span<const double>(means));
  return {est.location, est.scale};
}

NormalizeResult normalize_corpus(const std::vector<CareerYearRaw>& years, const ArticlePools& pools,
                                 const NormalizeOptions& options) {
  NormalizeResult out;
  out.n_realizations = options.n_realizations;

  std::map<CellKey, std::vector<double>> cell_counts;
  for (const auto& cy : years) cell_counts[{cy.discipline, cy.year}].push_back(cy.p);
  for (auto& [cell, counts] : cell_counts) {
    std::sort(counts.begin(), counts.end());
    auto est = counts.size() >= 2 ? huber_location_scale(std::span<const double>(counts), options.null.huber)
                                  : LocationScale<double>{counts.front(), 0.0, true, 0};
    if (counts.size() < 2 || !(est.scale > 0.0)) out.degenerate_cells.push_back(cell);
    out.productivity.emplace(cell, est);
  }

  std::vector<NullKey> todo;
  for (const auto& cy : years) {
    NullKey key{cy.discipline, cy.year, cy.p};
    if (options.cached_nulls) {
      if (auto it = options.cached_nulls->find(key); it != options.cached_nulls->end()) {
        out.nulls.emplace(key, it->second);
        continue;
      }
    }
    if (!out.nulls.count(key)) {
      out.nulls.emplace(key, NullMoments{});
      todo.push_back(std::move(key));
    }
  }

  std::vector<NullMoments> sampled(todo.size());
  parallel_for(todo.size(), [&](std::size_t t) {
    const auto& key = todo[t];
    const auto pool_it = pools.find({key.discipline, key.year});
    if (pool_it == pools.end()) throw DataError("no article pool for " + key.discipline + "/" + std::to_string(key.year));
    Engine rng = substream(options.seed, std::string_view("prestige-null"), key.discipline, key.year, key.p);
    sampled[t] = prestige_null(pool_it->second, key.p, options.n_realizations, rng, options.null);
  });
  for (std::size_t t = 0; t < todo.size(); ++t) out.nulls[todo[t]] = sampled[t];
  for (const auto& [key, null] : out.nulls)
    if (!(null.scale > 0.0)) out.degenerate_nulls.push_back(key);

  out.years.reserve(years.size());
  for (const auto& cy : years) {
    const auto& norm = out.productivity.at({cy.discipline, cy.year});
    const auto& null = out.nulls.at({cy.discipline, cy.year, cy.p});
    if (!(norm.scale > 0.0) || !(null.scale > 0.0)) {
      ++out.excluded_years;
      continue;
    }
    CareerYear scored{cy};
    scored.P = productivity_zscore(cy.p, norm);
    scored.I = prestige_zscore(cy.i, null);
    out.years.push_back(std::move(scored));
  }
  return out;
}

std::string corpus_fingerprint(const ArticlePools& pools) {
  std::uint64_t h = hash_string("article-pools");
  for (const auto& [cell, pool] : pools) {
    h = splitmix64(h ^ hash_string(cell.discipline)) + static_cast<std::uint64_t>(cell.year);
    for (double v : pool) h = splitmix64(h ^ hash_string(csv::format_double(v)));
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

namespace {
nlohmann::json key_json(const NullCacheKey& key) {
  return {{"corpus", key.corpus},
          {"seed", key.seed},
          {"n_realizations", key.n_realizations},
          {"sampling", key.sampling == Sampling::WithReplacement ? "with" : "without"},
          {"estimator", key.estimator == NullEstimator::Huber ? "huber" : "moments"}};
}
}  // namespace

void save_null_cache(const std::filesystem::path& path, const NullCacheKey& key, const PrestigeNullTable& table) {
  nlohmann::json doc;
  doc["key"] = key_json(key);
  auto& entries = doc["entries"] = nlohmann::json::array();
  for (const auto& [k, v] : table)
    entries.push_back({{"discipline", k.discipline}, {"year", k.year}, {"p", k.p},
                       {"location", v.location}, {"scale", v.scale}});
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

std::optional<PrestigeNullTable> load_null_cache(const std::filesystem::path& path, const NullCacheKey& key) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.contains("key") || doc["key"] != key_json(key)) return std::nullopt;
  PrestigeNullTable table;
  for (const auto& e : doc["entries"])
    table.emplace(NullKey{e["discipline"].get<std::string>(), e["year"].get<int>(), e["p"].get<int>()},
                  NullMoments{e["location"].get<double>(), e["scale"].get<double>()});
  return table;
}

}  // namespace scimetric
