// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            test-scale constants
//   acceptance --slow     production constants where a criterion has a scale knob
//   acceptance --only N   run criterion N alone (repeatable)
//   acceptance --strict   exit nonzero on any FAIL, including known ones
//
// Without --strict the exit status is nonzero only for a FAIL outside
// kKnownFailures. Those failures still print as FAIL; the README explains them.

#include <Eigen/Dense>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bayes_oracle.hpp"
#include "scimetric/bayes.hpp"
#include "scimetric/normalize.hpp"
#include "scimetric/pipeline.hpp"
#include "scimetric/plane.hpp"
#include "scimetric/robust.hpp"
#include "scimetric/stats.hpp"
#include "scimetric/synth.hpp"
#include "scimetric/transitions.hpp"
#include "support.hpp"

using namespace scimetric;
namespace fs = std::filesystem;

namespace {

// Criteria that fail for reasons analysed in the README, "Known failures":
// 3, the pinned Huber scheme stalls on heavily contaminated samples; 4, the
// Huber null scale ignores the skewed tail at small p; 9, adding the age term
// shifts mu_P by a real, if small, posterior amount.
const std::set<int> kKnownFailures{3, 4, 9};

bool g_slow = false;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Published logistic coefficients reproduce the quoted probabilities.
Outcome logistic_anchor() {
  const double p10 = predict_probability(1.849, -0.051, 10.0), p30 = predict_probability(1.849, -0.051, 30.0);
  return {std::abs(p10 - 0.79) <= 0.005 && std::abs(p30 - 0.58) <= 0.005, fmt("P(L=10)=%.4f P(L=30)=%.4f", p10, p30)};
}

// 2. Coefficient recovery at n = 5000 over 50 seeds.
Outcome logistic_recovery() {
  int both = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto s = generate_logistic_sample({1.849, -0.051}, 5000, 1, 45, seed);
    const auto f = fit_logistic(s.x, s.y);
    both += f.converged && std::abs(f.intercept - 1.849) <= 2 * f.intercept_se &&
            std::abs(f.slope + 0.051) <= 2 * f.slope_se;
  }
  return {both >= 45, fmt("%d/50 runs recover both within 2 SE (need >= 45)", both)};
}

// 3. Huber estimator against nested bisection, plus structural properties.
Outcome huber_correctness() {
  testsupport::Gen g(3);
  int matched = 0, converged = 0, converged_matched = 0, slow = 0, stalled = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto x = g.contaminated(g.integer(8, 200), g.uniform(0.0, 0.3));
    const auto r = huber_location_scale(std::span<const double>(x));
    const auto o = testsupport::huber_oracle(x, 1.5);
    const double err = o.found ? std::max(std::abs(r.location - o.location), std::abs(r.scale - o.scale))
                               : std::numeric_limits<double>::infinity();
    matched += err <= 1e-6;
    if (r.converged) {
      ++converged;
      converged_matched += err <= 1e-6;
    } else {
      // Diagnostic only: does the same scheme get there without the cap?
      const auto uncapped = huber_location_scale(std::span<const double>(x), HuberOptions{1.5, 1e-8, 100000});
      (uncapped.converged ? slow : stalled) += 1;
    }
  }
  bool affine = true, limit = true;
  for (int rep = 0; rep < 200; ++rep) {
    const auto x = g.contaminated(g.integer(10, 100), 0.1);
    const double a = g.coin() ? g.uniform(0.1, 20.0) : -g.uniform(0.1, 20.0), b = g.normal(0.0, 50.0);
    std::vector<double> y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = a * x[k] + b;
    const auto hx = huber_location_scale(std::span<const double>(x)), hy = huber_location_scale(std::span<const double>(y));
    affine &= hx.converged == hy.converged;
    if (hx.converged)
      affine &= std::abs(hy.location - (a * hx.location + b)) <= 1e-6 * std::abs(a) * hx.scale &&
                std::abs(hy.scale - std::abs(a) * hx.scale) <= 1e-6 * std::abs(a) * hx.scale;
    const auto big = huber_location_scale(std::span<const double>(x), HuberOptions{1e7, 1e-12, 200});
    limit &= big.converged && std::abs(big.location - testsupport::mean(x)) <= 1e-8 * (1 + std::abs(big.location)) &&
             std::abs(big.scale - testsupport::sd(x)) <= 1e-8 * big.scale;
  }
  return {matched == 1000 && affine && limit,
          fmt("%d/1000 within 1e-6 of the oracle; converged %d, of which %d match; not converged in 30 "
              "iterations: %d slow, %d with no valid scale update; affine %s; c->inf %s",
              matched, converged, converged_matched, slow, stalled, affine ? "ok" : "broken", limit ? "ok" : "broken")};
}

// 4. SD of I across null-behaving researchers is ~1 at every productivity level.
Outcome size_correction() {
  testsupport::Gen g(4);
  // Generator defaults: base metric ~ LogNormal(0.5, 0.7).
  std::vector<double> pool(5000);
  for (auto& v : pool) v = g.lognormal(0.5, 0.7);
  std::sort(pool.begin(), pool.end());
  const int realizations = 1000;
  auto run = [&](NullEstimator est, std::vector<double>& sd_I, std::vector<double>& sd_i) {
    for (int p : {1, 5, 20, 50}) {
      Engine nrng = substream(4, std::string_view("acceptance-null"), p);
      const auto null = prestige_null(pool, p, realizations, nrng, {Sampling::WithReplacement, est, {}});
      Engine rrng = substream(4, std::string_view("acceptance-researchers"), p);
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      std::vector<double> I, raw;
      for (int r = 0; r < 1000; ++r) {
        double s = 0.0;
        for (int k = 0; k < p; ++k) s += pool[pick(rrng)];
        raw.push_back(s / p);
        I.push_back(prestige_zscore(s / p, null));
      }
      sd_I.push_back(testsupport::sd(I));
      sd_i.push_back(testsupport::sd(raw));
    }
  };
  std::vector<double> sd_I, sd_i, m_I, m_i;
  run(NullEstimator::Huber, sd_I, sd_i);
  run(NullEstimator::Moments, m_I, m_i);
  bool ok = sd_i[3] < 0.5 * sd_i[0];
  for (double s : sd_I) ok &= s >= 0.9 && s <= 1.1;
  return {ok, fmt("Huber null SD(I) at p=1/5/20/50: %.3f %.3f %.3f %.3f; SD(i) p=50/p=1 = %.3f"
                  " [moments null: %.3f %.3f %.3f %.3f]",
                  sd_I[0], sd_I[1], sd_I[2], sd_I[3], sd_i[3] / sd_i[0], m_I[0], m_I[1], m_I[2], m_I[3])};
}

// 5. Sector partition: boundary grid and random points.
bool in_sector(Sector s, double I, double P, double tau) {
  switch (s) {
    case Sector::IPpp: return I > tau && P > tau;
    case Sector::Ipp: return I > tau && P <= tau;
    case Sector::Ppp: return P > tau && I <= tau;
    case Sector::IpPp: return I >= 0 && I <= tau && P >= 0 && P <= tau;
    case Sector::IpPm: return I >= 0 && I <= tau && P < 0;
    case Sector::ImPp: return I < 0 && P >= 0 && P <= tau;
    case Sector::ImPm: return I < 0 && P < 0;
  }
  return false;
}

Outcome sector_partition() {
  long checked = 0, bad = 0;
  auto check = [&](double I, double P, double tau) {
    int n = 0;
    for (Sector s : kAllSectors) n += in_sector(s, I, P, tau);
    ++checked;
    bad += n != 1 || !in_sector(classify_sector(I, P, tau), I, P, tau);
  };
  for (double tau : {3.5, 1.0, 0.25}) {
    std::vector<double> grid{-1e9, -1.0, 0.0, 1.0, tau, tau + 1.0, 1e9};
    for (double v : {0.0, tau}) {
      grid.push_back(std::nextafter(v, -INFINITY));
      grid.push_back(std::nextafter(v, INFINITY));
    }
    for (double I : grid)
      for (double P : grid) check(I, P, tau);
  }
  testsupport::Gen g(5);
  for (int k = 0; k < 1000000; ++k) {
    const double I = g.coin(0.05) ? (g.coin() ? 0.0 : 3.5) : g.normal(0.0, 3.0);
    const double P = g.coin(0.05) ? (g.coin() ? 0.0 : 3.5) : g.normal(0.0, 3.0);
    check(I, P, 3.5);
  }
  return {bad == 0, fmt("%ld points, %ld violations", checked, bad)};
}

// 6. Shuffle null calibration and sticky-chain detection.
Outcome transition_null() {
  const int shuffles = 2000, corpora = 10;
  Eigen::Matrix<double, 7, 1> initial;
  initial << 0.05, 0.05, 0.05, 0.25, 0.2, 0.2, 0.2;
  SectorMatrix iid;
  for (Eigen::Index a = 0; a < 7; ++a) iid.row(a) = initial.transpose();
  int defined = 0, inside = 0;
  for (int k = 1; k <= corpora; ++k) {
    const auto careers = generate_sector_careers(iid, initial, 500, 15, static_cast<std::uint64_t>(k));
    const auto e = excess_matrix(count_transitions(careers), shuffle_null(careers, shuffles, static_cast<std::uint64_t>(k)));
    for (Eigen::Index a = 0; a < 7; ++a)
      for (Eigen::Index b = 0; b < 7; ++b) {
        if (!e.defined(a, b) || !(e.null_sd(a, b) > 0)) continue;
        ++defined;
        inside += std::abs(e.z(a, b)) <= 3.0;
      }
  }
  SectorMatrix sticky = SectorMatrix::Constant(0.5 / 6.0);
  sticky.diagonal().setConstant(0.5);
  const Eigen::Matrix<double, 7, 1> flat = Eigen::Matrix<double, 7, 1>::Constant(1.0 / 7.0);
  const auto careers = generate_sector_careers(sticky, flat, 500, 15, 99);
  const auto e = excess_matrix(count_transitions(careers), shuffle_null(careers, shuffles, 99));
  int positive = 0;
  for (Eigen::Index k = 0; k < 7; ++k) positive += e.defined(k, k) && e.excess(k, k) > 0.0;
  const double share = static_cast<double>(inside) / defined;
  return {share >= 0.99 && positive == 7,
          fmt("i.i.d.: %d/%d defined cells within 3 null SDs (%.2f%%) over %d corpora; sticky: %d/7 diagonal > 0",
              inside, defined, 100.0 * share, corpora, positive)};
}

// 7. Entropy spot check and bounds.
Outcome entropy() {
  OccupationProfile prof;
  prof.fractions[index(Sector::IPpp)] = 0.5;
  prof.fractions[index(Sector::Ipp)] = 0.25;
  prof.fractions[index(Sector::Ppp)] = 0.25;
  const double h = *sector_entropy(prof, kOutlierSectors);
  testsupport::Gen g(7);
  long out_of_bounds = 0;
  for (int rep = 0; rep < 100000; ++rep) {
    OccupationProfile p;
    double total = 0.0;
    for (auto& f : p.fractions) total += f = g.coin(0.2) ? 0.0 : g.uniform();
    if (total == 0.0) continue;
    for (auto& f : p.fractions) f /= total;
    for (auto subset : {std::span<const Sector>(kOutlierSectors), std::span<const Sector>(kNonOutlierSectors),
                        std::span<const Sector>(kAllSectors)}) {
      const auto v = sector_entropy(p, subset);
      if (v && !(*v >= 0.0 && *v <= 1.0 + 1e-12)) ++out_of_bounds;
    }
  }
  return {std::abs(h - 0.946) <= 1e-3 && out_of_bounds == 0,
          fmt("H(1/2,1/4,1/4)=%.5f; %ld of 1e5 profiles out of [0,1]", h, out_of_bounds)};
}

HierarchicalModelSpec desk(bool age, int chains, int iterations) {
  HierarchicalModelSpec s;
  s.include_age = age;
  s.chains = chains;
  s.iterations = iterations;
  s.burn_in = iterations / 2;
  s.keep_individual = false;
  return s;
}

// 8. Planted recovery, convergence and conditional correctness.
Outcome bayes_recovery() {
  HierarchicalTruth truth;
  truth.mu_P = -0.2;
  truth.mu_A = -0.01;
  truth.sigma_A = 0.005;
  const auto ds = generate_hierarchical_dataset(truth, 50, 15, 8);
  const auto samples = fit_hierarchical(ds.data, desk(true, 4, 4000), 8);
  const auto post = posterior_summary(samples);
  const auto& mp = post["mu_P"];
  const auto& ma = post["mu_A"];
  const bool cover = mp.lo <= -0.2 && -0.2 <= mp.hi && ma.lo <= -0.01 && -0.01 <= ma.hi;
  double worst_rhat = 0.0;
  for (const auto& s : post.group) worst_rhat = std::max(worst_rhat, s.rhat);

  // Coefficient conditionals against a 2-D grid on the toy data.
  const auto toy = testsupport::toy_data();
  const HierarchicalSampler sampler(toy, desk(false, 1, 10));
  const auto st = testsupport::toy_state();
  double grid_err = 0.0;
  for (int r = 0; r < 3; ++r) {
    const auto c = sampler.coefficient_conditional(r, st);
    auto logf = [&](double a, double b) {
      double acc = testsupport::log_normal_pdf(a, st.mu(0), st.sigma(0)) + testsupport::log_normal_pdf(b, st.mu(1), st.sigma(1));
      for (std::size_t k = 0; k < toy.rows(); ++k)
        if (toy.researcher[k] == r) acc += testsupport::log_normal_pdf(toy.I[k], a + b * toy.P[k], st.epsilon);
      return acc;
    };
    const Eigen::Vector2d half = 8.0 * c.cov.diagonal().cwiseSqrt();
    const auto m = testsupport::grid_moments(logf, c.mean - half, c.mean + half, 400);
    grid_err = std::max({grid_err, (m.mean - c.mean).norm(), (m.cov - c.cov).norm() / c.cov.norm()});
  }
  return {cover && worst_rhat < 1.1 && grid_err < 1e-4,
          fmt("mu_P %.4f [%.4f, %.4f], mu_A %.5f [%.5f, %.5f]; max R-hat %.4f; toy grid error %.1e", mp.mean, mp.lo,
              mp.hi, ma.mean, ma.lo, ma.hi, worst_rhat, grid_err)};
}

// 9. With gamma = 0, adding the age term leaves mu_P unchanged within MC error.
Outcome age_robustness() {
  HierarchicalTruth truth;
  truth.mu_P = -0.2;
  truth.mu_A = 0.0;
  truth.sigma_A = 0.0;
  const auto ds = generate_hierarchical_dataset(truth, 50, 15, 9);
  const int iters = g_slow ? 10000 : 4000, chains = g_slow ? 8 : 4;
  const auto without = posterior_summary(fit_hierarchical(ds.data, desk(false, chains, iters), 9))["mu_P"];
  const auto with = posterior_summary(fit_hierarchical(ds.data, desk(true, chains, iters), 10))["mu_P"];
  const double pooled = std::hypot(without.mcse, with.mcse), diff = std::abs(with.mean - without.mean);
  return {diff < 2 * pooled,
          fmt("mu_P without age %.5f, with age %.5f; |diff| %.5f vs 2 pooled MCSE %.5f (|diff| = %.2f posterior SD)",
              without.mean, with.mean, diff, 2 * pooled, diff / without.sd)};
}

// 10. Permutation p-values uniform under the null; bootstrap coverage.
Outcome resampling_calibration() {
  testsupport::Gen g(10);
  std::vector<double> ps;
  for (int run = 0; run < 1000; ++run) {
    std::vector<double> a(15), b(20);
    for (auto& v : a) v = g.lognormal(0.0, 1.0);
    for (auto& v : b) v = g.lognormal(0.0, 1.0);
    ps.push_back(permutation_test(a, b, 999, static_cast<std::uint64_t>(run)).p_value);
  }
  const double ks = testsupport::ks_uniform(ps);
  int covered = 0;
  for (int run = 0; run < 1000; ++run) {
    std::vector<double> x(100);
    for (auto& v : x) v = g.normal(2.0, 1.5);
    const auto ci = bootstrap_ci(x, 2000, 0.95, static_cast<std::uint64_t>(run));
    covered += ci.lo <= 2.0 && 2.0 <= ci.hi;
  }
  const double coverage = covered / 1000.0;
  return {ks < 0.05 && coverage >= 0.93 && coverage <= 0.97,
          fmt("permutation KS distance %.4f; bootstrap coverage %.1f%%", ks, 100.0 * coverage)};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// 11. Two full runs with the same seed give byte-identical data outputs.
Outcome determinism() {
  const auto root = fs::temp_directory_path() / ("scimetric_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string scale = g_slow ? "" : " --realizations 200 --shuffles 1000";
  int threads = 1;
  for (const char* name : {"a", "b"}) {
    const std::string cmd = std::string("\"") + SCIMETRIC_CLI + "\" all --seed 11 --threads " + std::to_string(threads) +
                            scale + " --out \"" + (root / name).string() + "\" >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      fs::remove_all(root);
      return {false, fmt("run %s exited with status %d", name, status)};
    }
    threads = 4;
  }
  const auto files = data_files(root / "a");
  int differing = 0;
  for (const auto& f : files) differing += slurp(root / "a" / f) != slurp(root / "b" / f);
  const bool same_list = files == data_files(root / "b");
  fs::remove_all(root);
  return {same_list && differing == 0 && !files.empty(),
          fmt("%zu data files, %d differ; file lists %s (threads 1 vs 4)", files.size(), differing,
              same_list ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::set<int> only;
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    if (a == "--slow") g_slow = true;
    else if (a == "--strict") strict = true;
    else if (a == "--only" && k + 1 < argc) only.insert(std::atoi(argv[++k]));
    else {
      std::cerr << "usage: acceptance [--slow] [--strict] [--only N]...\n";
      return 1;
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"logistic anchor", logistic_anchor},
      {"logistic recovery", logistic_recovery},
      {"Huber correctness", huber_correctness},
      {"size correction", size_correction},
      {"sector partition", sector_partition},
      {"transition null calibration", transition_null},
      {"entropy", entropy},
      {"Bayesian recovery", bayes_recovery},
      {"age-term robustness", age_robustness},
      {"permutation/bootstrap calibration", resampling_calibration},
      {"end-to-end determinism", determinism},
  };
  int unexpected = 0, failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool known = kKnownFailures.count(id) > 0;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[k].first << ": " << o.detail
              << fmt(" (%.1fs)", secs) << (!o.pass && known ? " [known]" : "") << std::endl;
    if (!o.pass) {
      ++failed;
      unexpected += !known;
    }
  }
  std::cout << failed << " failed, " << unexpected << " unexpected" << std::endl;
  return (strict ? failed : unexpected) ? 1 : 0;
}
