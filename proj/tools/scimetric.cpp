// Command-line driver: one subcommand per pipeline stage plus `all`.

#include <CLI11.hpp>

#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "scimetric/error.hpp"
#include "scimetric/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Flags {
  std::string config, out, publications, metrics, meta;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  int realizations = 0, shuffles = 0, permutations = 0, bootstrap = 0, chains = 0, iters = 0, burn_in = 0;
  int min_researchers = 0;
  double tau = 0.0;
  std::string null_replacement, null_estimator, gap_policy, window, perm_unit;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scientometric pipeline: normalization, sector classification, transitions and hierarchical models"};
  app.require_subcommand(1);
  Flags f;
  std::map<std::string, CLI::Option*> opt;
  opt["config"] = app.add_option("--config", f.config, "JSON run configuration; flags override it");
  opt["out"] = app.add_option("--out", f.out, "output directory (default: out)");
  opt["publications"] = app.add_option("--publications", f.publications, "publications CSV/JSONL for ingest");
  opt["metrics"] = app.add_option("--metrics", f.metrics, "journal metrics CSV/JSONL for ingest");
  opt["meta"] = app.add_option("--meta", f.meta, "researcher meta CSV/JSONL for ingest");
  opt["seed"] = app.add_option("--seed", f.seed, "master seed");
  opt["threads"] = app.add_option("--threads", f.threads, "worker cap, 0 = hardware concurrency");
  opt["realizations"] = app.add_option("--realizations", f.realizations, "prestige null realizations (1000)")->check(CLI::PositiveNumber);
  opt["shuffles"] = app.add_option("--shuffles", f.shuffles, "transition null shuffles (10000)")->check(CLI::PositiveNumber);
  opt["permutations"] = app.add_option("--permutations", f.permutations, "permutation test draws (100000)")->check(CLI::PositiveNumber);
  opt["bootstrap"] = app.add_option("--bootstrap", f.bootstrap, "bootstrap resamples (10000)")->check(CLI::PositiveNumber);
  opt["tau"] = app.add_option("--tau", f.tau, "outlier threshold (3.5)")->check(CLI::PositiveNumber);
  opt["chains"] = app.add_option("--chains", f.chains, "MCMC chains (8)")->check(CLI::PositiveNumber);
  opt["iters"] = app.add_option("--iters", f.iters, "MCMC iterations per chain (10000)")->check(CLI::PositiveNumber);
  opt["burn-in"] = app.add_option("--burn-in", f.burn_in, "MCMC burn-in (5000)")->check(CLI::NonNegativeNumber);
  opt["min-researchers"] = app.add_option("--min-researchers", f.min_researchers, "discipline filter threshold (50)")
                               ->check(CLI::PositiveNumber);
  opt["null-replacement"] = app.add_option("--null-replacement", f.null_replacement, "with|without")
                                ->check(CLI::IsMember({"with", "without"}));
  opt["null-estimator"] = app.add_option("--null-estimator", f.null_estimator, "huber|moments")
                              ->check(CLI::IsMember({"huber", "moments"}));
  opt["gap-policy"] = app.add_option("--gap-policy", f.gap_policy, "break|bridge")->check(CLI::IsMember({"break", "bridge"}));
  opt["window"] = app.add_option("--window", f.window, "centered|trailing")->check(CLI::IsMember({"centered", "trailing"}));
  opt["perm-unit"] = app.add_option("--perm-unit", f.perm_unit, "researcher-year|researcher")
                         ->check(CLI::IsMember({"researcher-year", "researcher"}));

  std::vector<std::pair<CLI::App*, std::optional<scimetric::Stage>>> subs;
  for (scimetric::Stage s : scimetric::kAllStages) {
    auto* sub = app.add_subcommand(std::string(scimetric::stage_name(s)), "run the " + std::string(scimetric::stage_name(s)) + " stage");
    sub->fallthrough();
    subs.emplace_back(sub, s);
  }
  auto* all = app.add_subcommand("all", "synth (unless inputs are given) and every analysis stage");
  all->fallthrough();
  subs.emplace_back(all, std::nullopt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    scimetric::RunConfig config;
    if (opt["config"]->count()) {
      std::ifstream in(f.config, std::ios::binary);
      if (!in) {
        std::cerr << "error: cannot read config " << f.config << '\n';
        return kUsage;
      }
      std::ostringstream text;
      text << in.rdbuf();
      config = scimetric::run_config_from_json(text.str(), config);
    }
    // Flags win over the config file.
    nlohmann::json overrides = nlohmann::json::object();
    auto given = [&](const char* name) { return opt.at(name)->count() > 0; };
    if (given("out")) config.out = f.out;
    if (given("publications")) config.publications = f.publications;
    if (given("metrics")) config.metrics = f.metrics;
    if (given("meta")) config.meta = f.meta;
    if (given("seed")) config.seed = f.seed;
    if (given("threads")) config.threads = f.threads;
    if (given("realizations")) config.realizations = f.realizations;
    if (given("shuffles")) config.shuffles = f.shuffles;
    if (given("permutations")) config.permutations = f.permutations;
    if (given("bootstrap")) config.bootstrap = f.bootstrap;
    if (given("tau")) config.tau = f.tau;
    if (given("chains")) config.chains = f.chains;
    if (given("iters")) config.iterations = f.iters;
    if (given("burn-in")) config.burn_in = f.burn_in;
    if (given("min-researchers")) config.min_researchers = f.min_researchers;
    if (given("null-replacement")) overrides["null_replacement"] = f.null_replacement;
    if (given("null-estimator")) overrides["null_estimator"] = f.null_estimator;
    if (given("gap-policy")) overrides["gap_policy"] = f.gap_policy;
    if (given("window")) overrides["window"] = f.window;
    if (given("perm-unit")) overrides["perm_unit"] = f.perm_unit;
    if (!overrides.empty()) config = scimetric::run_config_from_json(overrides.dump(), config);
    config.validate();

    for (const auto& [sub, stage] : subs) {
      if (!sub->parsed()) continue;
      if (stage)
        scimetric::run_stage(*stage, config);
      else
        scimetric::run_all(config);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const scimetric::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const scimetric::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
