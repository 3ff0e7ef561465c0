#include <doctest.h>

#include "probekit/pipeline.hpp"
#include "test_support.hpp"

using namespace probekit;
using probekit::testing::TempDir;
namespace fs = std::filesystem;

TEST_CASE("run config JSON round-trips and rejects unknown keys") {
  RunConfig c;
  c.corpus_dir = "/data/corpus";
  c.out_dir = "out";
  c.target = Target::kRole;
  c.probe_targets = {Target::kNationality};
  c.extraction.sampled_layers = {1, 2};
  c.extraction.reference_layer = 2;
  c.window_stance = WindowStanceMode::kAnyToken;
  c.skip = {Stage::kControls};
  c.seed = 99;
  const nlohmann::json j = c;
  RunConfig back;
  from_json(j, back);
  CHECK(nlohmann::json(back) == j);
  CHECK(back.skip.count(Stage::kControls));
  nlohmann::json bad = j;
  bad["sede"] = 1;
  CHECK_THROWS_AS(from_json(bad, back), ConfigError);
  bad = j;
  bad["seed"] = "x";
  CHECK_THROWS_AS(from_json(bad, back), ConfigError);
}

TEST_CASE("run config validation") {
  RunConfig c;
  c.corpus_dir = "c";
  c.out_dir = "o";
  CHECK_NOTHROW(c.validate());
  c.target = Target::kCohort6;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.target = Target::kNationality;
  c.probe_targets = {Target::kRole, Target::kRole};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.probe_targets = {Target::kRole};
  c.split_ratio = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.split_ratio = 0.8;
  c.n_permutations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_stage("extract") == Stage::kExtract);
  CHECK_THROWS_AS(parse_stage("nope"), ConfigError);
}

TEST_CASE("seeds derive from the master seed") {
  RunConfig c;
  c.seed = 5;
  CHECK(c.split_seed() == derive_seed(5, 1));
  CHECK(c.probe_seed() == derive_seed(5, 2));
  CHECK(c.effective_probe().seed == c.probe_seed());
  CHECK(c.split_seed() != c.probe_seed());
}

TEST_CASE("full run writes every artifact and is byte-identical across output dirs") {
  TempDir dir("pipe_det");
  RunConfig a = probekit::testing::small_run(dir.path(), true);
  RunConfig b = a;
  b.out_dir = dir.path() / "elsewhere" / "run2";
  run_pipeline(a);
  run_pipeline(b);
  for (const char* f : {"corpus.json", "split.json", "sweep.json", "controls.json", "extraction.json", "windows.jsonl",
                        "singles.jsonl", "annotation.json", "annotated.jsonl", "sentences.jsonl", "stats.json",
                        "report.json", "report.md", "sweep_accuracy.svg", "score_gap.svg", "probes/nationality.json",
                        "csv/T2_probe_controls.csv"}) {
    CHECK_MESSAGE(fs::exists(a.out_dir / f), f);
    CHECK_MESSAGE(read_file(a.out_dir / f) == read_file(b.out_dir / f), f);
  }
  CHECK_FALSE(fs::exists(a.out_dir / "FAILED"));
  const auto report = nlohmann::json::parse(read_file(a.out_dir / "report.json"));
  const std::string prov = report["provenance"].dump();
  CHECK(prov.find(dir.path().string()) == std::string::npos);
  CHECK(report["provenance"]["seed"] == 11);
  CHECK(report["provenance"]["derived_seeds"].is_object());
  CHECK(report["provenance"]["inputs"]["tokens_sha256"].is_string());
}

TEST_CASE("stages rerun alone from earlier artifacts") {
  TempDir dir("pipe_stage");
  RunConfig c = probekit::testing::small_run(dir.path(), true);
  run_pipeline(c);
  const std::string before = read_file(c.out_dir / "report.json");
  const std::string stats_before = read_file(c.out_dir / "stats.json");
  Pipeline p(c);
  p.run_stats();
  CHECK(read_file(c.out_dir / "stats.json") == stats_before);
  p.run_report();
  CHECK(read_file(c.out_dir / "report.json") == before);
}

TEST_CASE("a different seed changes the run id and the split") {
  TempDir dir("pipe_seed");
  RunConfig c = probekit::testing::small_run(dir.path(), false);
  c.skip = {Stage::kControls, Stage::kExtract, Stage::kAnnotate, Stage::kStats};
  run_pipeline(c);
  RunConfig d = c;
  d.out_dir = dir.path() / "run_b";
  d.seed = 12;
  run_pipeline(d);
  CHECK(read_file(c.out_dir / "split.json") != read_file(d.out_dir / "split.json"));
  CHECK(Pipeline(c).run_id() != Pipeline(d).run_id());
  RunConfig e = c;
  e.run_id = "fixed";
  CHECK(Pipeline(e).run_id() == "fixed");
  CHECK_FALSE(fs::exists(c.out_dir / "controls.json"));
}

TEST_CASE("missing tokens skip annotation outputs and remove stale ones") {
  TempDir dir("pipe_tokens");
  RunConfig c = probekit::testing::small_run(dir.path(), true);
  run_pipeline(c);
  CHECK(fs::exists(c.out_dir / "annotated.jsonl"));
  fs::remove(c.corpus_dir / "tokens.jsonl");
  RunConfig again = c;
  run_pipeline(again);
  CHECK_FALSE(fs::exists(c.out_dir / "annotated.jsonl"));
  const auto ann = nlohmann::json::parse(read_file(c.out_dir / "annotation.json"));
  CHECK(ann["annotated"] == false);
  const auto stats = nlohmann::json::parse(read_file(c.out_dir / "stats.json"));
  CHECK(stats["annotated"] == false);
  CHECK(stats["trajectory"].is_array());
}

TEST_CASE("a failing stage leaves a FAILED marker naming it") {
  TempDir dir("pipe_fail");
  RunConfig c = probekit::testing::small_run(dir.path(), false);
  write_file(c.corpus_dir / "ex0003.actd", "broken");
  try {
    run_pipeline(c);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.kind() == DataError::Kind::kFormat);
  }
  REQUIRE(fs::exists(c.out_dir / "FAILED"));
  const std::string marker = read_file(c.out_dir / "FAILED");
  CHECK(marker.rfind("sweep", 0) == 0);
  CHECK(marker.find("ex0003") != std::string::npos);

  TempDir dir2("pipe_fail_stage");
  RunConfig d = probekit::testing::small_run(dir2.path(), false);
  d.extraction.sampled_layers = {1, 3, 40};  // layer outside the corpus
  CHECK_THROWS(run_pipeline(d));
  REQUIRE(fs::exists(d.out_dir / "FAILED"));
  CHECK(read_file(d.out_dir / "FAILED").rfind("extract", 0) == 0);
}

TEST_CASE("split JSON round-trips") {
  Split s;
  s.train_ids = {"a", "b"};
  s.test_ids = {"c"};
  s.ratio = 0.7;
  s.seed = 3;
  s.key = StratifyKey::kRole;
  const Split back = split_from_json(split_to_json(s));
  CHECK(back.train_ids == s.train_ids);
  CHECK(back.test_ids == s.test_ids);
  CHECK(back.key == StratifyKey::kRole);
  CHECK(back.seed == 3);
}
