#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "probekit/common.hpp"
#include "test_support.hpp"

using namespace probekit;
using probekit::testing::TempDir;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + PROBEKIT_CLI_PATH + "\" " + args + " >\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("synth then pipeline succeeds and flags reach the configuration") {
  TempDir dir("cli_ok");
  const auto log = dir.path() / "log.txt";
  const std::string corpus = (dir.path() / "corpus").string();
  const std::string out = (dir.path() / "run").string();
  REQUIRE(run_cli("synth --out \"" + corpus +
                      "\" --n-examples 60 --layers 6 --dim 12 --min-tokens 40 --max-tokens 60 "
                      "--planted-layer 3 --strength 3 --with-tokens --seed 2",
                  log) == 0);
  CHECK(fs::exists(fs::path(corpus) / "tokens.jsonl"));
  const auto synth_config = nlohmann::json::parse(read_file(fs::path(corpus) / "synth_config.json"));
  CHECK(synth_config["strength_profile"][3] == 3.0);
  CHECK(run_cli("pipeline --corpus \"" + corpus + "\" --out \"" + out +
                    "\" --permutations 5 --sampled-layers 1 3 5 --reference-layer 3 --seed 4 --window-stance any_token "
                    "--yates --quiet",
                log) == 0);
  const auto report = nlohmann::json::parse(read_file(fs::path(out) / "report.json"));
  CHECK(report["provenance"]["flags"]["window_stance"] == "any_token");
  CHECK(report["provenance"]["flags"]["yates"] == true);
  CHECK(report["tables"]["T2_probe_controls"]["rows"][0][1] == 3);

  const std::string out2 = (dir.path() / "run_sweep").string();
  CHECK(run_cli("sweep --corpus \"" + corpus + "\" --out \"" + out2 + "\" --probe-targets nationality --quiet", log) == 0);
  CHECK(fs::exists(fs::path(out2) / "sweep.json"));
  CHECK(fs::exists(fs::path(out2) / "split.json"));
  CHECK(run_cli("report --corpus \"" + corpus + "\" --out \"" + out2 + "\" --quiet", log) == 0);
  CHECK(fs::exists(fs::path(out2) / "report.md"));
}

TEST_CASE("exit codes separate configuration, data and stage failures") {
  TempDir dir("cli_codes");
  const auto log = dir.path() / "log.txt";
  CHECK(run_cli("--help", log) == 0);
  CHECK(run_cli("", log) == 2);
  CHECK(run_cli("pipeline --no-such-flag", log) == 2);
  CHECK(run_cli("pipeline --corpus x --out y --window-stance sideways", log) == 2);
  write_file(dir.path() / "bad.json", R"({"unknown_key": 1})");
  CHECK(run_cli("pipeline --config \"" + (dir.path() / "bad.json").string() + "\" --corpus x --out y", log) == 2);
  CHECK(run_cli("synth --out \"" + (dir.path() / "s").string() + "\" --sparsity 0.0001", log) == 2);

  CHECK(run_cli("pipeline --corpus \"" + (dir.path() / "missing").string() + "\" --out \"" +
                    (dir.path() / "run").string() + "\" --quiet",
                log) == 3);
  CHECK(read_file(log).find("data error") != std::string::npos);
  CHECK(fs::exists(dir.path() / "run" / "FAILED"));

  const std::string corpus = (dir.path() / "corpus").string();
  REQUIRE(run_cli("synth --out \"" + corpus + "\" --n-examples 60 --layers 4 --dim 6 --min-tokens 20 --max-tokens 30", log) == 0);
  // A sampled layer the corpus lacks is a configuration error found by the extract stage.
  CHECK(run_cli("pipeline --corpus \"" + corpus + "\" --out \"" + (dir.path() / "run2").string() +
                    "\" --sampled-layers 1 9 --reference-layer 1 --permutations 2 --quiet",
                log) == 2);
  CHECK(read_file(dir.path() / "run2" / "FAILED").rfind("extract", 0) == 0);
  // More folds than examples per class fails inside the sweep.
  CHECK(run_cli("pipeline --corpus \"" + corpus + "\" --out \"" + (dir.path() / "run3").string() +
                    "\" --k-folds 40 --sampled-layers 1 --reference-layer 1 --permutations 2 --quiet",
                log) == 4);
  CHECK(read_file(dir.path() / "run3" / "FAILED").rfind("sweep", 0) == 0);
}
