#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "scimetric/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("scimetric_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Result {
  int code = -1;
  std::string err;
};

Result run(const std::string& args) {
  const auto err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + SCIMETRIC_CLI + "\" " + args + " >/dev/null 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

fs::path small_config() {
  const auto p = scratch() / "small.json";
  std::ofstream(p) << R"({"realizations": 100, "shuffles": 200, "permutations": 999, "bootstrap": 200,
    "chains": 2, "iters": 400, "burn_in": 200, "min_researchers": 20,
    "synth": {"disciplines": [{"name": "physics", "researchers": 80},
                              {"name": "chemistry", "researchers": 80, "base_productivity": 6.0}],
              "null_realizations": 100}})";
  return p;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run("").code == 1);
  CHECK(run("all --no-such-flag").code == 1);
  CHECK(run("all --gap-policy sideways").code == 1);
  CHECK(run("all --burn-in 500 --iters 400 --out " + (scratch() / "u").string()).code == 1);
  CHECK(run("all --config " + (scratch() / "absent.json").string()).code == 1);
  CHECK(run("--help").code == 0);
}

TEST_CASE("missing upstream artifacts exit with 2 and name the producer") {
  const auto out = scratch() / "empty";
  auto r = run("normalize --out " + out.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("scimetric ingest") != std::string::npos);
  r = run("bayes --out " + out.string());
  CHECK(r.code == 2);
  CHECK(r.err.find("scimetric normalize") != std::string::npos);
  r = run("ingest --out " + out.string() + " --publications " + (scratch() / "nope.csv").string());
  CHECK(r.code == 2);
}

TEST_CASE("full run is reproducible and leaves manifests and a report") {
  const auto cfg = small_config();
  const auto a = scratch() / "a", b = scratch() / "b";
  REQUIRE(run("all --config " + cfg.string() + " --seed 3 --threads 1 --out " + a.string()).code == 0);
  REQUIRE(run("all --config " + cfg.string() + " --seed 3 --threads 4 --out " + b.string()).code == 0);

  const auto files = scimetric::data_files(a);
  CHECK(files == scimetric::data_files(b));
  CHECK(files.size() > 30);
  for (const auto& f : files) CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f.string());

  for (scimetric::Stage s : scimetric::kAllStages) {
    const auto dir = a / std::string(scimetric::stage_name(s));
    REQUIRE(fs::exists(dir / "manifest.json"));
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(m.at("stage") == std::string(scimetric::stage_name(s)));
    CHECK(m.at("seed") == 3);
    CHECK(m.at("settings").at("shuffles") == 200);
    for (const auto& o : m.at("outputs")) CHECK(scimetric::sha256_file(a / o.at("path").get<std::string>()) == o.at("sha256"));
  }

  const auto index = nlohmann::json::parse(slurp(a / "report" / "index.json"));
  for (const auto& item : index) CHECK(fs::exists(a / "report" / item.at("file").get<std::string>()));
  for (const char* f : {"fig1a_plane.svg", "fig1b_venn.json", "fig1c_logistic.json", "fig1d_entropy.svg",
                        "fig1e_transitions_outlier.svg", "fig2_trends_P.svg", "fig3_occupancy.csv", "fig4_mu_P.svg"})
    CHECK_MESSAGE(fs::exists(a / "report" / f), f);

  // A rerun of one stage over existing upstream artifacts reproduces its outputs.
  const auto before = slurp(a / "classify" / "venn.json");
  REQUIRE(run("classify --config " + cfg.string() + " --seed 3 --out " + a.string()).code == 0);
  CHECK(slurp(a / "classify" / "venn.json") == before);

  // A different seed changes the data.
  const auto c = scratch() / "c";
  REQUIRE(run("synth --config " + cfg.string() + " --seed 4 --out " + c.string()).code == 0);
  CHECK(slurp(c / "synth" / "publications.csv") != slurp(a / "synth" / "publications.csv"));
}

TEST_CASE("ingest accepts explicit inputs") {
  const auto cfg = small_config();
  const auto a = scratch() / "a";
  if (!fs::exists(a / "synth" / "publications.csv"))
    REQUIRE(run("synth --config " + cfg.string() + " --seed 3 --out " + a.string()).code == 0);
  const auto d = scratch() / "d";
  const std::string inputs = " --publications " + (a / "synth" / "publications.csv").string() + " --metrics " +
                             (a / "synth" / "metrics.csv").string() + " --meta " + (a / "synth" / "meta.csv").string();
  REQUIRE(run("ingest --config " + cfg.string() + inputs + " --out " + d.string()).code == 0);
  CHECK(slurp(d / "ingest" / "career_years.csv") == slurp(a / "ingest" / "career_years.csv"));
  fs::remove_all(scratch());
}
