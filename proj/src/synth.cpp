#include "scimetric/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "scimetric/error.hpp"
#include "scimetric/normalize.hpp"
#include "scimetric/rng.hpp"
#include "scimetric/robust.hpp"

namespace scimetric {

using nlohmann::json;

namespace {

std::string padded(int v, int width) {
  std::string s = std::to_string(v);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

bool is_productivity_outlier(Sector s) { return s == Sector::Ppp || s == Sector::IPpp; }
bool is_prestige_outlier(Sector s) { return s == Sector::Ipp || s == Sector::IPpp; }

// Journals of one discipline-year, sorted by metric.
struct YearJournals {
  std::vector<double> metric;
  std::vector<int> journal;
};

struct PlanYear {
  int year = 0;
  int age = 0;
  double z = 0.0;                 // latent productivity
  std::optional<Sector> planted;  // outlier sector, if any
  bool extreme = false;
  bool demoted = false;  // planted prestige outlier that the journal range could not reach
  int p = 0;
  double P = 0.0;
  double I_target = 0.0;
  std::vector<int> picks;  // indices into the year's sorted journal list
};

struct PlanResearcher {
  ResearcherTruth truth;
  std::vector<PlanYear> years;
};

// Moves picks so that their mean metric approaches `target`, one article at
// a time, starting from the current selection. Stops once the mean is within
// `tol` of the target.
void hit_target(const YearJournals& yj, std::vector<int>& picks, double target, double tol) {
  const auto& m = yj.metric;
  const double want = target * static_cast<double>(picks.size());
  double sum = 0.0;
  for (int k : picks) sum += m[static_cast<std::size_t>(k)];
  for (std::size_t a = 0; a < picks.size(); ++a) {
    const double rest = sum - m[static_cast<std::size_t>(picks[a])];
    const double need = want - rest;
    auto it = std::lower_bound(m.begin(), m.end(), need);
    std::size_t best;
    if (it == m.end()) {
      best = m.size() - 1;
    } else if (it == m.begin()) {
      best = 0;
    } else {
      const auto hi = static_cast<std::size_t>(it - m.begin());
      best = (need - m[hi - 1] <= m[hi] - need) ? hi - 1 : hi;
    }
    sum = rest + m[best];
    picks[a] = static_cast<int>(best);
    if (std::abs(sum - want) <= tol * static_cast<double>(picks.size())) break;
  }
}

LocationScale<double> count_estimates(const std::vector<double>& counts) {
  if (counts.size() < 2) return {counts.empty() ? 0.0 : counts.front(), 0.0, true, 0};
  return huber_location_scale(std::span<const double>(counts));
}

}  // namespace

SynthConfig SynthConfig::defaults() {
  SynthConfig c;
  DisciplineConfig a;
  a.name = "physics";
  DisciplineConfig b;
  b.name = "chemistry";
  b.base_productivity = 6.0;
  b.productivity_sd = 2.0;
  b.metric_log_mean = 0.7;
  DisciplineConfig d;
  d.name = "mathematics";
  d.base_productivity = 3.5;
  d.productivity_sd = 1.4;
  d.productivity_drift = 0.8;
  d.metric_log_mean = 0.2;
  d.metric_log_sd = 0.7;
  d.metric_drift = 0.3;
  c.disciplines = {a, b, d};
  return c;
}

void SynthConfig::validate() const {
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError(std::string("synth config: ") + name + " must lie in [0, 1]");
  };
  if (disciplines.empty()) throw DataError("synth config: no disciplines");
  if (year_to < year_from) throw DataError("synth config: year_to precedes year_from");
  rate(gap_rate, "gap_rate");
  rate(duplicate_rate, "duplicate_rate");
  rate(outlier_rate, "outlier_rate");
  rate(both_rate, "both_rate");
  rate(simultaneous_rate, "simultaneous_rate");
  rate(outlier_year_rate, "outlier_year_rate");
  if (!(metric_coverage > 0.0 && metric_coverage <= 1.0)) throw DataError("synth config: metric_coverage must lie in (0, 1]");
  if (!(productivity_persistence >= 0.0 && productivity_persistence < 1.0))
    throw DataError("synth config: productivity_persistence must lie in [0, 1)");
  if (null_realizations < 10) throw DataError("synth config: null_realizations must be >= 10");
  if (refine_passes < 0) throw DataError("synth config: refine_passes must be >= 0");
  if (extreme_years < 0) throw DataError("synth config: extreme_years must be >= 0");
  const auto& h = hierarchy;
  if (!(h.sigma_c >= 0 && h.sigma_P >= 0 && h.sigma_A >= 0 && h.epsilon > 0))
    throw DataError("synth config: hierarchical scales must be >= 0 and epsilon > 0");
  std::set<std::string> names;
  for (const auto& d : disciplines) {
    if (d.name.empty() || d.name.find_first_of(",\"\n") != std::string::npos)
      throw DataError("synth config: invalid discipline name '" + d.name + "'");
    if (!names.insert(d.name).second) throw DataError("synth config: duplicate discipline '" + d.name + "'");
    if (d.researchers < 2) throw DataError("synth config: " + d.name + " needs at least 2 researchers");
    if (d.journals < 2) throw DataError("synth config: " + d.name + " needs at least 2 journals");
    if (!(d.productivity_sd > 0.0)) throw DataError("synth config: " + d.name + " productivity_sd must be > 0");
    if (!(d.metric_log_sd > 0.0)) throw DataError("synth config: " + d.name + " metric_log_sd must be > 0");
    rate(d.dropout_fraction, "dropout_fraction");
  }
}

std::string_view planted_category_name(PlantedCategory c) noexcept {
  switch (c) {
    case PlantedCategory::NonOutlier: return "non_outlier";
    case PlantedCategory::Perfectionist: return "perfectionist";
    case PlantedCategory::Hyperprolific: return "hyperprolific";
    case PlantedCategory::BothSimultaneous: return "both_simultaneous";
    case PlantedCategory::BothNonSimultaneous: return "both_non_simultaneous";
  }
  return "unknown";
}

int DisciplineTruth::min_active() const {
  int m = std::numeric_limits<int>::max();
  for (const auto& [y, n] : active_researchers) m = std::min(m, n);
  return active_researchers.empty() ? 0 : m;
}

double GroundTruth::match_rate() const {
  const auto total = matched_articles + unmatched_articles;
  return total ? static_cast<double>(matched_articles) / static_cast<double>(total) : 0.0;
}

std::size_t GroundTruth::count(PlantedCategory c) const {
  return static_cast<std::size_t>(
      std::count_if(researchers.begin(), researchers.end(), [c](const ResearcherTruth& r) { return r.category == c; }));
}

SynthCorpus generate_corpus(const SynthConfig& config) {
  config.validate();
  const double tau = kOutlierThreshold;
  const int n_years = config.year_to - config.year_from + 1;
  const auto& H = config.hierarchy;

  SynthCorpus out;
  std::vector<PlanResearcher> all;

  std::vector<std::vector<YearJournals>> journals_by_disc;

  for (std::size_t di = 0; di < config.disciplines.size(); ++di) {
    const auto& D = config.disciplines[di];
    const std::string& name = D.name;

    // Journals and their yearly metrics.
    Engine jrng = substream(config.seed, std::string_view("synth-journals"), name);
    std::lognormal_distribution<double> base_dist(D.metric_log_mean, D.metric_log_sd);
    std::vector<double> base(static_cast<std::size_t>(D.journals));
    for (auto& b : base) b = base_dist(jrng);
    std::vector<YearJournals> yjs(static_cast<std::size_t>(n_years));
    for (int t = 0; t < n_years; ++t) {
      const int y = config.year_from + t;
      std::vector<std::pair<double, int>> v;
      for (int j = 0; j < D.journals; ++j) {
        const double m = std::max(0.01, base[static_cast<std::size_t>(j)] + D.metric_drift * t / 10.0);
        out.metrics.add(name + "-J" + padded(j + 1, 4), y, m);
        v.emplace_back(m, j);
      }
      std::sort(v.begin(), v.end());
      auto& yj = yjs[static_cast<std::size_t>(t)];
      for (const auto& [m, j] : v) {
        yj.metric.push_back(m);
        yj.journal.push_back(j);
      }
    }

    // Researchers, careers and planted categories.
    Engine rrng = substream(config.seed, std::string_view("synth-researchers"), name);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> phd_dist(config.year_from - 20, config.year_to - 3);
    std::vector<PlanResearcher> rs;
    for (int r = 0; r < D.researchers; ++r) {
      PlanResearcher pr;
      auto& t = pr.truth;
      t.researcher_id = name + "-R" + padded(r + 1, 4);
      t.discipline = name;
      t.phd_year = phd_dist(rrng);
      const int start = std::max(config.year_from, t.phd_year - 1);
      for (int y = start; y <= config.year_to; ++y) {
        const bool keep = y == start || y == config.year_to || unif(rrng) >= config.gap_rate;
        const bool dropped = D.dropout_year && *D.dropout_year == y && unif(rrng) < D.dropout_fraction;
        if (keep && !dropped) {
          PlanYear py;
          py.year = y;
          pr.years.push_back(py);
        }
      }
      if (pr.years.empty()) {
        PlanYear py;
        py.year = start;
        pr.years.push_back(py);
      }
      for (auto& py : pr.years) py.age = py.year - t.phd_year;
      t.career_length = pr.years.back().year - t.phd_year;

      t.c = H.mu_c + H.sigma_c * gauss(rrng);
      t.beta = H.mu_P + H.sigma_P * gauss(rrng);
      t.gamma = H.mu_A + H.sigma_A * gauss(rrng);

      const double u_out = unif(rrng);
      const double u_perf = unif(rrng);
      const double u_both = unif(rrng);
      const double u_sim = unif(rrng);
      const std::size_t n_active = pr.years.size();
      if (u_out < config.outlier_rate) {
        t.perfectionist = u_perf < logistic(config.perfectionist.intercept + config.perfectionist.slope * t.career_length);
        const bool both = u_both < config.both_rate && n_active >= 2;
        std::vector<Sector> required, pool;
        if (t.perfectionist && both && u_sim < config.simultaneous_rate) {
          t.category = PlantedCategory::BothSimultaneous;
          required = {Sector::IPpp, Sector::Ipp};
          pool = {Sector::IPpp, Sector::Ipp};
        } else if (t.perfectionist && both) {
          t.category = PlantedCategory::BothNonSimultaneous;
          required = {Sector::Ipp, Sector::Ppp};
          pool = {Sector::Ipp, Sector::Ppp};
        } else if (t.perfectionist) {
          t.category = PlantedCategory::Perfectionist;
          required = {Sector::Ipp};
          pool = {Sector::Ipp};
        } else if (both) {
          t.category = PlantedCategory::BothSimultaneous;
          required = {Sector::IPpp};
          pool = {Sector::IPpp, Sector::Ppp};
        } else {
          t.category = PlantedCategory::Hyperprolific;
          required = {Sector::Ppp};
          pool = {Sector::Ppp};
        }
        std::binomial_distribution<int> nb(static_cast<int>(n_active), config.outlier_year_rate);
        const std::size_t k =
            std::min(n_active, std::max(required.size(), static_cast<std::size_t>(nb(rrng))));
        std::vector<std::size_t> slots(n_active);
        std::iota(slots.begin(), slots.end(), 0);
        std::shuffle(slots.begin(), slots.end(), rrng);
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        for (std::size_t a = 0; a < k; ++a)
          pr.years[slots[a]].planted = a < required.size() ? required[a] : pool[pick(rrng)];
      }

      double z = gauss(rrng);
      const double rho = config.productivity_persistence;
      for (auto& py : pr.years) {
        py.z = std::clamp(z, -2.2, 2.2);
        z = rho * z + std::sqrt(1.0 - rho * rho) * gauss(rrng);
      }
      rs.push_back(std::move(pr));
    }

    // Extreme IPpp years replace planted-free years of non-outlier researchers.
    if (di == 0 && config.extreme_years > 0) {
      std::vector<std::size_t> candidates;
      for (std::size_t r = 0; r < rs.size(); ++r)
        if (rs[r].truth.category == PlantedCategory::NonOutlier) candidates.push_back(r);
      if (static_cast<int>(candidates.size()) < config.extreme_years)
        throw DataError("synth config: not enough non-outlier researchers for extreme_years");
      std::shuffle(candidates.begin(), candidates.end(), rrng);
      for (int e = 0; e < config.extreme_years; ++e) {
        auto& pr = rs[candidates[static_cast<std::size_t>(e)]];
        pr.truth.category = PlantedCategory::BothSimultaneous;
        std::uniform_int_distribution<std::size_t> slot(0, pr.years.size() - 1);
        auto& py = pr.years[slot(rrng)];
        py.planted = Sector::IPpp;
        py.extreme = true;
      }
    }

    // Yearly counts. Productivity outliers are placed relative to the cell's
    // non-outlier estimates, then every score is taken from the final estimates.
    Engine crng = substream(config.seed, std::string_view("synth-counts"), name);
    for (int t = 0; t < n_years; ++t) {
      const int y = config.year_from + t;
      const double mean = D.base_productivity + D.productivity_drift * t / 10.0;
      std::vector<PlanYear*> cell;
      for (auto& pr : rs)
        for (auto& py : pr.years)
          if (py.year == y) cell.push_back(&py);
      if (cell.empty()) continue;

      std::vector<double> base_counts;
      for (auto* py : cell) {
        py->p = std::max(1, static_cast<int>(std::lround(mean + D.productivity_sd * py->z)));
        if (!py->planted || !is_productivity_outlier(*py->planted)) base_counts.push_back(py->p);
      }
      auto est = count_estimates(base_counts);
      if (!(est.scale > 0.0)) est.scale = D.productivity_sd;
      // Ipp years get the most articles that stay clearly below tau in P: a
      // larger p narrows the prestige null, so less excess per article is needed.
      for (auto* py : cell)
        if (py->planted && *py->planted == Sector::Ipp)
          py->p = std::max({py->p, 3, static_cast<int>(std::floor(est.location + 2.5 * est.scale))});
      std::uniform_real_distribution<double> p_out(5.5, 8.0), p_ext(30.0, 34.0);
      for (auto* py : cell)
        if (py->planted && is_productivity_outlier(*py->planted)) {
          const double target = py->extreme ? p_ext(crng) : p_out(crng);
          py->p = static_cast<int>(std::ceil(est.location + target * est.scale));
        }

      for (int iter = 0;; ++iter) {
        std::vector<double> counts;
        for (auto* py : cell) counts.push_back(py->p);
        const auto fin = count_estimates(counts);
        if (!(fin.scale > 0.0))
          throw DataError("synth: degenerate productivity in " + name + " " + std::to_string(y));
        bool changed = false;
        for (auto* py : cell) {
          py->P = (py->p - fin.location) / fin.scale;
          const bool out_p = py->planted && is_productivity_outlier(*py->planted);
          if (out_p && py->P <= tau + 0.5) {
            py->p = static_cast<int>(std::ceil(fin.location + (tau + 1.0) * fin.scale));
            changed = true;
          } else if (py->extreme && py->P < kExtremeProductivity + 1.0) {
            py->p = static_cast<int>(std::ceil(fin.location + (kExtremeProductivity + 2.0) * fin.scale));
            changed = true;
          } else if (!out_p && py->P > tau - 0.3) {
            py->p = std::max(1, static_cast<int>(std::floor(fin.location + (tau - 0.5) * fin.scale)));
            changed = true;
          }
        }
        if (!changed) break;
        if (iter == 20) throw DataError("synth: cannot separate productivity outliers in " + name + " " + std::to_string(y));
      }
    }

    // Prestige targets.
    Engine irng = substream(config.seed, std::string_view("synth-prestige"), name);
    std::uniform_real_distribution<double> i_out(4.5, 6.5);
    for (auto& pr : rs)
      for (auto& py : pr.years) {
        if (py.planted && is_prestige_outlier(*py.planted)) {
          py.I_target = i_out(irng);
        } else {
          const auto& t = pr.truth;
          const double v = t.c + t.beta * py.P + t.gamma * py.age + H.epsilon * gauss(irng);
          py.I_target = std::clamp(v, -3.0, 3.0);
        }
      }

    // Article routing: first against the journal-metric distribution, then
    // against the realized article pool.
    Engine arng = substream(config.seed, std::string_view("synth-articles"), name);
    for (int pass = 0; pass <= config.refine_passes; ++pass) {
      for (int t = 0; t < n_years; ++t) {
        const int y = config.year_from + t;
        const auto& yj = yjs[static_cast<std::size_t>(t)];
        std::vector<PlanYear*> cell;
        for (auto& pr : rs)
          for (auto& py : pr.years)
            if (py.year == y) cell.push_back(&py);
        if (cell.empty()) continue;

        std::vector<double> pool;
        if (pass == 0) {
          pool = yj.metric;
        } else {
          for (auto* py : cell)
            for (int k : py->picks) pool.push_back(yj.metric[static_cast<std::size_t>(k)]);
          std::sort(pool.begin(), pool.end());
        }

        std::map<int, NullMoments> nulls;
        for (auto* py : cell) {
          if (nulls.count(py->p)) continue;
          Engine nrng = substream(config.seed, std::string_view("synth-null"), name, y, py->p, pass);
          nulls[py->p] = prestige_null(pool, py->p, config.null_realizations, nrng);
        }

        std::uniform_int_distribution<int> any(0, static_cast<int>(yj.metric.size()) - 1);
        for (auto* py : cell) {
          const auto& nm = nulls.at(py->p);
          if (!(nm.scale > 0.0)) throw DataError("synth: degenerate prestige null in " + name);
          if (pass == 0) {
            py->picks.resize(static_cast<std::size_t>(py->p));
            for (auto& k : py->picks) k = any(arng);
          }
          if (py->planted && is_prestige_outlier(*py->planted)) {
            const double i_max = (yj.metric.back() - nm.location) / nm.scale;
            if (pass == 0 && i_max - 0.1 < tau + 0.5)
              throw DataError("synth: prestige outlier unreachable in " + name + " " + std::to_string(y) + " at p=" + std::to_string(py->p) +
                              " (journal metrics too narrow)");
            py->I_target = std::max(tau + 1.0, std::min(py->I_target, i_max - 0.1));
          }
          hit_target(yj, py->picks, nm.location + py->I_target * nm.scale, 0.1 * nm.scale);
        }
      }
    }

    // Repair: sparse top-end journals and the pool's own outliers can leave a
    // year on the wrong side of tau. Re-score against the realized pool.
    for (int t = 0; t < n_years; ++t) {
      const int y = config.year_from + t;
      const auto& yj = yjs[static_cast<std::size_t>(t)];
      std::vector<PlanYear*> cell;
      for (auto& pr : rs)
        for (auto& py : pr.years)
          if (py.year == y) cell.push_back(&py);
      // Years still short of tau after a few rounds are demoted rather than
      // failing the run; the ground truth follows what was actually planted.
      const int demote_from = 4, rounds = 8;
      for (int round = 0; round < rounds && !cell.empty(); ++round) {
        std::vector<double> pool;
        for (auto* py : cell)
          for (int k : py->picks) pool.push_back(yj.metric[static_cast<std::size_t>(k)]);
        std::sort(pool.begin(), pool.end());
        std::map<int, NullMoments> nulls;
        bool changed = false;
        for (auto* py : cell) {
          if (!nulls.count(py->p)) {
            Engine nrng = substream(config.seed, std::string_view("synth-null-check"), name, y, py->p, round);
            nulls[py->p] = prestige_null(pool, py->p, std::max(config.null_realizations, 1000), nrng);
          }
          const auto& nm = nulls.at(py->p);
          double sum = 0.0;
          for (int k : py->picks) sum += yj.metric[static_cast<std::size_t>(k)];
          const double I = (sum / static_cast<double>(py->p) - nm.location) / nm.scale;
          const bool out_i = py->planted && is_prestige_outlier(*py->planted);
          if (out_i && I < tau + 0.5) {
            if (round >= demote_from) {
              py->planted = *py->planted == Sector::IPpp ? std::optional<Sector>(Sector::Ppp) : std::nullopt;
              py->demoted = true;
              py->I_target = tau - 1.0;
            }
            hit_target(yj, py->picks, nm.location + py->I_target * nm.scale, 0.1 * nm.scale);
            changed = true;
          } else if (!out_i && I > tau - 0.4) {
            py->I_target = std::min(py->I_target, tau - 1.0);
            hit_target(yj, py->picks, nm.location + py->I_target * nm.scale, 0.1 * nm.scale);
            changed = true;
          }
        }
        if (!changed) break;
        if (round == rounds - 1)
          throw DataError("synth: cannot separate prestige outliers in " + name + " " + std::to_string(y) +
                          " (journal metrics too narrow)");
      }
    }

    for (auto& pr : rs) all.push_back(std::move(pr));
    journals_by_disc.push_back(std::move(yjs));
  }

  // Emission.
  std::size_t matched = 0;
  std::map<std::string, std::size_t> disc_index;
  for (std::size_t di = 0; di < config.disciplines.size(); ++di) disc_index[config.disciplines[di].name] = di;

  struct Slot {
    std::size_t researcher;
    std::size_t year;
  };
  std::vector<Slot> slots;
  for (std::size_t r = 0; r < all.size(); ++r)
    for (std::size_t k = 0; k < all[r].years.size(); ++k) {
      slots.push_back({r, k});
      matched += all[r].years[k].picks.size();
    }

  const double cov = config.metric_coverage;
  const auto n_unmatched = static_cast<std::size_t>(std::llround(static_cast<double>(matched) * (1.0 - cov) / cov));
  std::vector<int> extra(slots.size(), 0);
  Engine urng = substream(config.seed, std::string_view("synth-unmatched"));
  if (!slots.empty()) {
    std::uniform_int_distribution<std::size_t> s(0, slots.size() - 1);
    for (std::size_t u = 0; u < n_unmatched; ++u) ++extra[s(urng)];
  }

  for (std::size_t si = 0; si < slots.size(); ++si) {
    const auto& pr = all[slots[si].researcher];
    const auto& py = pr.years[slots[si].year];
    const auto& yj = journals_by_disc[disc_index.at(pr.truth.discipline)][static_cast<std::size_t>(py.year - config.year_from)];
    const std::string stem = "10.5555/" + pr.truth.researcher_id + "." + std::to_string(py.year) + ".";
    int n = 0;
    for (int k : py.picks) {
      out.publications.push_back({pr.truth.researcher_id, pr.truth.discipline, py.year,
                                  pr.truth.discipline + "-J" + padded(yj.journal[static_cast<std::size_t>(k)] + 1, 4),
                                  stem + std::to_string(++n)});
    }
    for (int u = 0; u < extra[si]; ++u)
      out.publications.push_back({pr.truth.researcher_id, pr.truth.discipline, py.year,
                                  pr.truth.discipline + "-X" + padded(u % 50 + 1, 3), stem + std::to_string(++n)});
  }

  const auto n_dup = static_cast<std::size_t>(
      std::llround(config.duplicate_rate * static_cast<double>(out.publications.size())));
  if (n_dup > 0) {
    Engine drng = substream(config.seed, std::string_view("synth-duplicates"));
    std::vector<std::size_t> idx(out.publications.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), drng);
    idx.resize(std::min(n_dup, idx.size()));
    std::sort(idx.begin(), idx.end());
    std::vector<PublicationRecord> merged;
    merged.reserve(out.publications.size() + idx.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < out.publications.size(); ++i) {
      merged.push_back(out.publications[i]);
      if (next < idx.size() && idx[next] == i) {
        merged.push_back(out.publications[i]);
        ++next;
      }
    }
    out.publications = std::move(merged);
    out.truth.duplicate_rows = idx.size();
  }

  out.truth.matched_articles = matched;
  out.truth.unmatched_articles = n_unmatched;

  for (auto& pr : all) {
    auto& t = pr.truth;
    out.meta.push_back({t.researcher_id, t.discipline, t.phd_year});
    for (const auto& py : pr.years) {
      t.years.push_back({py.year, py.age, py.p, py.P, py.I_target, classify_sector(py.I_target, py.P, tau)});
      out.truth.extreme_years += py.extreme;
      out.truth.demoted_years += py.demoted;
    }
    bool ipp = false, ppp = false, ippp = false;
    for (const auto& py : pr.years)
      if (py.planted) {
        ipp |= *py.planted == Sector::Ipp;
        ppp |= *py.planted == Sector::Ppp;
        ippp |= *py.planted == Sector::IPpp;
      }
    t.perfectionist = ipp;
    t.category = ippp        ? PlantedCategory::BothSimultaneous
                 : ipp && ppp ? PlantedCategory::BothNonSimultaneous
                 : ipp        ? PlantedCategory::Perfectionist
                 : ppp        ? PlantedCategory::Hyperprolific
                              : PlantedCategory::NonOutlier;
    t.bayes_eligible = t.category == PlantedCategory::NonOutlier && t.career_length > 5;
    auto& dt = out.truth.disciplines[t.discipline];
    for (int y = config.year_from; y <= config.year_to; ++y) dt.active_researchers.try_emplace(y, 0);
    for (const auto& py : pr.years) ++dt.active_researchers[py.year];
    out.truth.researchers.push_back(std::move(t));
  }
  return out;
}

namespace {

json discipline_to_json(const DisciplineConfig& d) {
  json j{{"name", d.name},
         {"researchers", d.researchers},
         {"base_productivity", d.base_productivity},
         {"productivity_sd", d.productivity_sd},
         {"productivity_drift", d.productivity_drift},
         {"metric_log_mean", d.metric_log_mean},
         {"metric_log_sd", d.metric_log_sd},
         {"metric_drift", d.metric_drift},
         {"journals", d.journals},
         {"dropout_fraction", d.dropout_fraction}};
  j["dropout_year"] = d.dropout_year ? json(*d.dropout_year) : json(nullptr);
  return j;
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

std::string synth_config_to_json(const SynthConfig& c) {
  json j;
  j["disciplines"] = json::array();
  for (const auto& d : c.disciplines) j["disciplines"].push_back(discipline_to_json(d));
  j["year_from"] = c.year_from;
  j["year_to"] = c.year_to;
  j["gap_rate"] = c.gap_rate;
  j["metric_coverage"] = c.metric_coverage;
  j["duplicate_rate"] = c.duplicate_rate;
  j["outlier_rate"] = c.outlier_rate;
  j["both_rate"] = c.both_rate;
  j["simultaneous_rate"] = c.simultaneous_rate;
  j["outlier_year_rate"] = c.outlier_year_rate;
  j["extreme_years"] = c.extreme_years;
  j["productivity_persistence"] = c.productivity_persistence;
  j["hierarchy"] = {{"mu_c", c.hierarchy.mu_c},       {"sigma_c", c.hierarchy.sigma_c}, {"mu_P", c.hierarchy.mu_P},
                    {"sigma_P", c.hierarchy.sigma_P}, {"mu_A", c.hierarchy.mu_A},       {"sigma_A", c.hierarchy.sigma_A},
                    {"epsilon", c.hierarchy.epsilon}};
  j["perfectionist"] = {{"intercept", c.perfectionist.intercept}, {"slope", c.perfectionist.slope}};
  j["null_realizations"] = c.null_realizations;
  j["refine_passes"] = c.refine_passes;
  j["seed"] = c.seed;
  return j.dump(2);
}

SynthConfig synth_config_from_json(const std::string& text) {
  SynthConfig c = SynthConfig::defaults();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("synth config: ") + e.what());
  }
  try {
    if (j.contains("disciplines")) {
      c.disciplines.clear();
      for (const auto& dj : j.at("disciplines")) {
        DisciplineConfig d;
        read_opt(dj, "name", d.name);
        read_opt(dj, "researchers", d.researchers);
        read_opt(dj, "base_productivity", d.base_productivity);
        read_opt(dj, "productivity_sd", d.productivity_sd);
        read_opt(dj, "productivity_drift", d.productivity_drift);
        read_opt(dj, "metric_log_mean", d.metric_log_mean);
        read_opt(dj, "metric_log_sd", d.metric_log_sd);
        read_opt(dj, "metric_drift", d.metric_drift);
        read_opt(dj, "journals", d.journals);
        read_opt(dj, "dropout_fraction", d.dropout_fraction);
        if (dj.contains("dropout_year") && !dj.at("dropout_year").is_null())
          d.dropout_year = dj.at("dropout_year").get<int>();
        c.disciplines.push_back(std::move(d));
      }
    }
    read_opt(j, "year_from", c.year_from);
    read_opt(j, "year_to", c.year_to);
    read_opt(j, "gap_rate", c.gap_rate);
    read_opt(j, "metric_coverage", c.metric_coverage);
    read_opt(j, "duplicate_rate", c.duplicate_rate);
    read_opt(j, "outlier_rate", c.outlier_rate);
    read_opt(j, "both_rate", c.both_rate);
    read_opt(j, "simultaneous_rate", c.simultaneous_rate);
    read_opt(j, "outlier_year_rate", c.outlier_year_rate);
    read_opt(j, "extreme_years", c.extreme_years);
    read_opt(j, "productivity_persistence", c.productivity_persistence);
    read_opt(j, "null_realizations", c.null_realizations);
    read_opt(j, "refine_passes", c.refine_passes);
    read_opt(j, "seed", c.seed);
    if (j.contains("hierarchy")) {
      const auto& h = j.at("hierarchy");
      read_opt(h, "mu_c", c.hierarchy.mu_c);
      read_opt(h, "sigma_c", c.hierarchy.sigma_c);
      read_opt(h, "mu_P", c.hierarchy.mu_P);
      read_opt(h, "sigma_P", c.hierarchy.sigma_P);
      read_opt(h, "mu_A", c.hierarchy.mu_A);
      read_opt(h, "sigma_A", c.hierarchy.sigma_A);
      read_opt(h, "epsilon", c.hierarchy.epsilon);
    }
    if (j.contains("perfectionist")) {
      read_opt(j.at("perfectionist"), "intercept", c.perfectionist.intercept);
      read_opt(j.at("perfectionist"), "slope", c.perfectionist.slope);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string ground_truth_json(const GroundTruth& truth) {
  json j;
  j["matched_articles"] = truth.matched_articles;
  j["unmatched_articles"] = truth.unmatched_articles;
  j["match_rate"] = truth.match_rate();
  j["duplicate_rows"] = truth.duplicate_rows;
  j["extreme_years"] = truth.extreme_years;
  j["demoted_years"] = truth.demoted_years;
  json counts;
  for (auto c : {PlantedCategory::NonOutlier, PlantedCategory::Perfectionist, PlantedCategory::Hyperprolific,
                 PlantedCategory::BothSimultaneous, PlantedCategory::BothNonSimultaneous})
    counts[std::string(planted_category_name(c))] = truth.count(c);
  j["category_counts"] = counts;
  json discs = json::object();
  for (const auto& [name, dt] : truth.disciplines) {
    json active = json::object();
    for (const auto& [y, n] : dt.active_researchers) active[std::to_string(y)] = n;
    discs[name] = {{"active_researchers", active}, {"min_active", dt.min_active()}};
  }
  j["disciplines"] = discs;
  j["researchers"] = json::array();
  for (const auto& r : truth.researchers) {
    json years = json::array();
    for (const auto& y : r.years)
      years.push_back({{"year", y.year},
                       {"career_age", y.career_age},
                       {"p", y.p},
                       {"P", y.P},
                       {"I_target", y.I_target},
                       {"sector", std::string(sector_name(y.sector))}});
    j["researchers"].push_back({{"researcher_id", r.researcher_id},
                                {"discipline", r.discipline},
                                {"phd_year", r.phd_year},
                                {"career_length", r.career_length},
                                {"category", std::string(planted_category_name(r.category))},
                                {"perfectionist", r.perfectionist},
                                {"c", r.c},
                                {"beta", r.beta},
                                {"gamma", r.gamma},
                                {"bayes_eligible", r.bayes_eligible},
                                {"years", years}});
  }
  return j.dump(1);
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_publications_csv(dir / "publications.csv", corpus.publications);
  write_metrics_csv(dir / "metrics.csv", corpus.metrics);
  write_meta_csv(dir / "meta.csv", corpus.meta);
  std::ofstream f(dir / "ground_truth.json", std::ios::binary);
  if (!f) throw DataError("cannot write " + (dir / "ground_truth.json").string());
  f << ground_truth_json(corpus.truth) << '\n';
}

HierarchicalDataset generate_hierarchical_dataset(const HierarchicalTruth& truth, int researchers, int years,
                                                  std::uint64_t seed) {
  if (researchers < 1 || years < 1) throw std::invalid_argument("generate_hierarchical_dataset: empty design");
  Engine rng = substream(seed, std::string_view("synth-hierarchical"));
  std::normal_distribution<double> g(0.0, 1.0);
  HierarchicalDataset out;
  out.coefficients.resize(researchers, 3);
  for (int j = 0; j < researchers; ++j) {
    const double c = truth.mu_c + truth.sigma_c * g(rng);
    const double b = truth.mu_P + truth.sigma_P * g(rng);
    const double a = truth.mu_A + truth.sigma_A * g(rng);
    out.coefficients.row(j) << c, b, a;
    const std::string id = "R" + padded(j + 1, 4);
    for (int t = 1; t <= years; ++t) {
      const double P = g(rng);
      const double I = c + b * P + a * t + truth.epsilon * g(rng);
      out.data.add(id, I, P, t);
    }
  }
  return out;
}

std::vector<LabeledCareer> generate_sector_careers(const SectorMatrix& kernel,
                                                   const Eigen::Matrix<double, kSectorCount, 1>& initial,
                                                   int researchers, int years, std::uint64_t seed) {
  if (researchers < 0 || years < 1) throw std::invalid_argument("generate_sector_careers: empty design");
  if ((kernel.array() < 0.0).any() || (initial.array() < 0.0).any())
    throw std::invalid_argument("generate_sector_careers: negative probability");
  auto make = [](const auto& row) {
    std::vector<double> w(row.size());
    for (Eigen::Index k = 0; k < row.size(); ++k) w[static_cast<std::size_t>(k)] = row(k);
    return std::discrete_distribution<int>(w.begin(), w.end());
  };
  auto first = make(initial);
  std::vector<std::discrete_distribution<int>> rows;
  for (Eigen::Index k = 0; k < kernel.rows(); ++k) rows.push_back(make(kernel.row(k)));

  Engine rng = substream(seed, std::string_view("synth-sector-careers"));
  std::vector<LabeledCareer> out;
  out.reserve(static_cast<std::size_t>(researchers));
  for (int r = 0; r < researchers; ++r) {
    LabeledCareer c;
    c.researcher_id = "R" + padded(r + 1, 5);
    c.discipline = "synthetic";
    int s = first(rng);
    for (int t = 0; t < years; ++t) {
      if (t > 0) s = rows[static_cast<std::size_t>(s)](rng);
      c.years.push_back(2000 + t);
      c.ages.push_back(t + 1);
      c.sectors.push_back(static_cast<Sector>(s));
    }
    c.career_length = years;
    out.push_back(std::move(c));
  }
  return out;
}

LogisticSample generate_logistic_sample(const LogisticTruth& truth, int n, int x_min, int x_max, std::uint64_t seed) {
  if (n < 0 || x_max < x_min) throw std::invalid_argument("generate_logistic_sample: bad design");
  Engine rng = substream(seed, std::string_view("synth-logistic"));
  std::uniform_int_distribution<int> xd(x_min, x_max);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LogisticSample s;
  for (int k = 0; k < n; ++k) {
    const int x = xd(rng);
    s.x.push_back(x);
    s.y.push_back(u(rng) < logistic(truth.intercept + truth.slope * x) ? 1 : 0);
  }
  return s;
}

}  // namespace scimetric
