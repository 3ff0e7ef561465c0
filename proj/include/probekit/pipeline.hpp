#pragma once

// Run configuration and stage orchestration. Every stage reads its inputs
// from the corpus directory and earlier artifacts under out_dir, so each can
// be rerun alone; artifact paths are relative to out_dir.

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "probekit/annotation.hpp"
#include "probekit/control_suite.hpp"
#include "probekit/report.hpp"
#include "probekit/signal_extraction.hpp"
#include "probekit/stat_battery.hpp"

namespace probekit {

enum class Stage { kSplit, kSweep, kControls, kExtract, kAnnotate, kStats, kReport };
inline constexpr Stage kAllStages[] = {Stage::kSplit,    Stage::kSweep, Stage::kControls, Stage::kExtract,
                                       Stage::kAnnotate, Stage::kStats, Stage::kReport};
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

/// A stage failed for a reason other than bad configuration or bad data.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error("stage " + stage + " failed: " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct RunConfig {
  std::filesystem::path corpus_dir;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> tokens_path;  // default <corpus_dir>/tokens.jsonl
  std::optional<std::filesystem::path> lexicon_dir;  // default: built-in lists
  Target target = Target::kNationality;              // extraction and statistics
  std::vector<Target> probe_targets{Target::kNationality, Target::kMedium, Target::kRole};
  /// The seed field is replaced by one derived from the master seed.
  ProbeConfig probe;
  ExtractionConfig extraction;
  double split_ratio = 0.8;
  StratifyKey stratify = StratifyKey::kCohort;
  std::size_t n_permutations = 100;
  bool yates = false;
  WindowStanceMode window_stance = WindowStanceMode::kFocusToken;
  Domain contrast_domain = Domain::kSociocultural;
  std::uint64_t seed = 0;
  /// Empty: derived from the configuration and the input hashes.
  std::string run_id;
  std::set<Stage> skip;

  /// Throws ConfigError.
  void validate() const;

  std::uint64_t split_seed() const { return derive_seed(seed, 1); }
  std::uint64_t probe_seed() const { return derive_seed(seed, 2); }
  std::uint64_t permutation_seed() const { return derive_seed(seed, 3); }
  ProbeConfig effective_probe() const;
  std::filesystem::path effective_tokens_path() const;
};

/// Paths are included; provenance drops them and records input hashes.
void to_json(nlohmann::json& j, const RunConfig& c);
/// Missing keys keep their defaults; unknown keys raise ConfigError.
void from_json(const nlohmann::json& j, RunConfig& c);

nlohmann::json split_to_json(const Split& s);
Split split_from_json(const nlohmann::json& j);

/// Reads a JSON document; DataError on a missing or malformed file.
nlohmann::json read_json(const std::filesystem::path& path);

class Pipeline {
 public:
  using Logger = std::function<void(const std::string&)>;

  explicit Pipeline(RunConfig config, Logger log = {});

  void run_split();
  void run_sweep();
  void run_controls();
  void run_extract();
  void run_annotate();
  void run_stats();
  Report run_report();

  /// Runs every stage not in config.skip, then assembles the report from
  /// whatever artifacts exist. A FAILED marker naming the stage and cause is
  /// left in out_dir when a stage throws.
  Report run_all();

  const RunConfig& config() const { return config_; }
  std::string run_id();

 private:
  template <class F>
  auto guarded(Stage stage, F&& body);
  const Corpus& corpus();
  std::vector<ExampleMeta> meta();
  Split split();
  LexiconSet lexicons() const;
  nlohmann::json input_hashes();
  nlohmann::json provenance();
  std::filesystem::path path(std::string_view rel) const { return config_.out_dir / rel; }
  void log(const std::string& msg) const;

  RunConfig config_;
  Logger log_;
  std::optional<Corpus> corpus_;
  std::optional<nlohmann::json> input_hashes_;
};

Report run_pipeline(const RunConfig& config, Pipeline::Logger log = {});

}  // namespace probekit
