// probekit command-line entry point. Exit codes: 0 success, 2 configuration
// error, 3 data error, 4 stage failure.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

#include "probekit/pipeline.hpp"
#include "probekit/synth_oracle.hpp"

namespace {

using namespace probekit;
namespace fs = std::filesystem;

struct RunFlags {
  std::string config_file;
  std::string corpus_dir;
  std::string out_dir;
  std::string tokens_path;
  std::string lexicon_dir;
  std::string target;
  std::vector<std::string> probe_targets;
  std::uint64_t seed = 0;
  std::string run_id;
  bool yates = false;
  std::string window_stance;
  std::string calibration_split;
  std::string overlap;
  std::size_t permutations = 0;
  double split_ratio = 0.0;
  std::string stratify;
  double inverse_reg_C = 0.0;
  int k_folds = 0;
  int max_iter = 0;
  double grad_tol = 0.0;
  std::vector<int> sampled_layers;
  int reference_layer = 0;
  int window_width = 0;
  double single_quantile = 0.0;
  double window_quantile = 0.0;
  std::string contrast_domain;
  std::vector<std::string> skip;
  bool quiet = false;
};

void add_run_options(CLI::App* sub, RunFlags& f, bool with_skip) {
  sub->add_option("--config", f.config_file, "JSON run configuration; flags override it");
  sub->add_option("--corpus", f.corpus_dir, "Corpus directory (meta.jsonl and .actd files)");
  sub->add_option("--out", f.out_dir, "Output directory; artifact paths are relative to it");
  sub->add_option("--tokens", f.tokens_path, "tokens.jsonl (default: <corpus>/tokens.jsonl)");
  sub->add_option("--lexicons", f.lexicon_dir, "Lexicon directory (default: built-in lists)");
  sub->add_option("--target", f.target, "Extraction and statistics target");
  sub->add_option("--probe-targets", f.probe_targets, "Targets for the sweep and controls");
  sub->add_option("--seed", f.seed, "Master seed");
  sub->add_option("--run-id", f.run_id, "Run identifier (default: derived from config and inputs)");
  sub->add_flag("--yates", f.yates, "Yates correction for 2x2 chi-square tests");
  sub->add_option("--window-stance", f.window_stance, "focus_token or any_token");
  sub->add_option("--calibration-split", f.calibration_split, "train or all")
      ->check(CLI::IsMember({"train", "all"}));
  sub->add_option("--overlap", f.overlap, "greedy_non_overlap or per_anchor");
  sub->add_option("--permutations", f.permutations, "Shuffled-label permutations");
  sub->add_option("--split-ratio", f.split_ratio, "Training fraction of the fixed split");
  sub->add_option("--stratify", f.stratify, "Split stratification key");
  sub->add_option("--inverse-reg-c", f.inverse_reg_C, "Inverse regularisation strength");
  sub->add_option("--k-folds", f.k_folds, "Cross-validation folds");
  sub->add_option("--max-iter", f.max_iter, "Optimizer iteration cap");
  sub->add_option("--grad-tol", f.grad_tol, "Optimizer gradient tolerance");
  sub->add_option("--sampled-layers", f.sampled_layers, "Layers used for token extraction");
  sub->add_option("--reference-layer", f.reference_layer, "Threshold calibration layer");
  sub->add_option("--window-width", f.window_width, "Window width (odd)");
  sub->add_option("--single-quantile", f.single_quantile, "Upper quantile for single tokens");
  sub->add_option("--window-quantile", f.window_quantile, "Upper quantile for windows");
  sub->add_option("--contrast-domain", f.contrast_domain, "Lexical domain for the domain contrast");
  if (with_skip) sub->add_option("--skip", f.skip, "Stages to skip");
  sub->add_flag("--quiet", f.quiet, "No progress messages");
}

RunConfig build_run_config(const CLI::App* sub, const RunFlags& f) {
  RunConfig c;
  if (!f.config_file.empty()) {
    try {
      from_json(read_json(f.config_file), c);
    } catch (const DataError& e) {
      throw ConfigError(std::string("cannot read config: ") + e.what());
    }
  }
  auto set = [&](const char* name) { return sub->count(name) > 0; };
  if (set("--corpus")) c.corpus_dir = f.corpus_dir;
  if (set("--out")) c.out_dir = f.out_dir;
  if (set("--tokens")) c.tokens_path = fs::path(f.tokens_path);
  if (set("--lexicons")) c.lexicon_dir = fs::path(f.lexicon_dir);
  if (set("--target")) c.target = parse_target(f.target);
  if (set("--probe-targets")) {
    c.probe_targets.clear();
    for (const auto& t : f.probe_targets) c.probe_targets.push_back(parse_target(t));
  }
  if (set("--seed")) c.seed = f.seed;
  if (set("--run-id")) c.run_id = f.run_id;
  if (set("--yates")) c.yates = f.yates;
  if (set("--window-stance")) c.window_stance = parse_window_stance_mode(f.window_stance);
  if (set("--calibration-split")) c.extraction.calibrate_on_train = f.calibration_split == "train";
  if (set("--overlap")) c.extraction.overlap = parse_overlap_mode(f.overlap);
  if (set("--permutations")) c.n_permutations = f.permutations;
  if (set("--split-ratio")) c.split_ratio = f.split_ratio;
  if (set("--stratify")) c.stratify = parse_stratify_key(f.stratify);
  if (set("--inverse-reg-c")) c.probe.inverse_reg_C = f.inverse_reg_C;
  if (set("--k-folds")) c.probe.k_folds = f.k_folds;
  if (set("--max-iter")) c.probe.max_iter = f.max_iter;
  if (set("--grad-tol")) c.probe.grad_tol = f.grad_tol;
  if (set("--sampled-layers")) c.extraction.sampled_layers = f.sampled_layers;
  if (set("--reference-layer")) c.extraction.reference_layer = f.reference_layer;
  if (set("--window-width")) c.extraction.window_width = f.window_width;
  if (set("--single-quantile")) c.extraction.single_quantile = f.single_quantile;
  if (set("--window-quantile")) c.extraction.window_quantile = f.window_quantile;
  if (set("--contrast-domain")) {
    try {
      c.contrast_domain = parse_domain(f.contrast_domain);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }
  if (sub->get_option_no_throw("--skip") && set("--skip")) {
    c.skip.clear();
    for (const auto& s : f.skip) c.skip.insert(parse_stage(s));
  }
  c.validate();
  return c;
}

struct SynthFlags {
  std::string config_file;
  std::string out_dir;
  std::size_t n_examples = 0;
  std::size_t n_layers = 0;
  std::size_t hidden_dim = 0;
  std::size_t min_tokens = 0;
  std::size_t max_tokens = 0;
  std::size_t planted_layer = 0;
  double strength = 0.0;
  double sparsity = 0.0;
  std::uint64_t seed = 0;
  bool with_tokens = false;
};

int run_synth(const CLI::App* sub, const SynthFlags& f) {
  nlohmann::json j = nlohmann::json::object();
  if (!f.config_file.empty()) {
    try {
      j = read_json(f.config_file);
    } catch (const DataError& e) {
      throw ConfigError(std::string("cannot read synth config: ") + e.what());
    }
  }
  auto set = [&](const char* name) { return sub->count(name) > 0; };
  if (set("--n-examples")) j["n_examples"] = f.n_examples;
  if (set("--layers")) j["n_layers"] = f.n_layers;
  if (set("--dim")) j["hidden_dim"] = f.hidden_dim;
  if (set("--min-tokens")) j["min_tokens"] = f.min_tokens;
  if (set("--max-tokens")) j["max_tokens"] = f.max_tokens;
  if (set("--sparsity")) j["token_sparsity"] = f.sparsity;
  if (set("--seed")) j["seed"] = f.seed;
  if (set("--with-tokens")) j["with_tokens"] = f.with_tokens;
  if (set("--planted-layer")) {
    j.erase("strength_profile");
    j["planted_layer"] = f.planted_layer;
    j["strength"] = set("--strength") ? f.strength : j.value("strength", 1.0);
  }
  SynthConfig config = j.get<SynthConfig>();
  const SynthCorpus synth = generate(config);
  save_synth(synth, config, f.out_dir);
  fmt::print("wrote {} examples ({} layers, dim {}) to {}\n", synth.corpus.meta.size(), config.n_layers,
             config.hidden_dim, f.out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear probes over layered hidden states, with controls, token extraction, annotation and "
               "statistics"};
  app.require_subcommand(1);

  SynthFlags sf;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus with a planted signal");
  synth->add_option("--config", sf.config_file, "JSON synth configuration; flags override it");
  synth->add_option("--out", sf.out_dir, "Corpus output directory")->required();
  synth->add_option("--n-examples", sf.n_examples, "Number of examples");
  synth->add_option("--layers", sf.n_layers, "Number of layers");
  synth->add_option("--dim", sf.hidden_dim, "Hidden dimension");
  synth->add_option("--min-tokens", sf.min_tokens, "Minimum generated tokens per example");
  synth->add_option("--max-tokens", sf.max_tokens, "Maximum generated tokens per example");
  synth->add_option("--planted-layer", sf.planted_layer, "Single layer carrying the signal");
  synth->add_option("--strength", sf.strength, "Class-mean gap at the planted layer");
  synth->add_option("--sparsity", sf.sparsity, "Fraction of token rows carrying the signal");
  synth->add_option("--seed", sf.seed, "Generator seed");
  synth->add_flag("--with-tokens", sf.with_tokens, "Also write tokens.jsonl");

  RunFlags rf;
  struct StageCommand {
    const char* name;
    const char* help;
    CLI::App* app = nullptr;
  };
  StageCommand stages[] = {
      {"sweep", "Per-layer cross-validated probes for each target"},
      {"controls", "Held-out accuracy, shuffled baseline, selectivity, skyline and transfer"},
      {"extract", "High-signal windows and single tokens"},
      {"annotate", "Structural, stance, domain and quality labels for tokens.jsonl"},
      {"stats", "Statistical tests over the joined selections"},
      {"report", "Assemble report tables from the artifacts"},
      {"pipeline", "Run every stage, then the report"},
  };
  for (auto& s : stages) {
    s.app = app.add_subcommand(s.name, s.help);
    add_run_options(s.app, rf, std::string_view(s.name) == "pipeline");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return run_synth(synth, sf);
    for (const auto& s : stages) {
      if (!s.app->parsed()) continue;
      RunConfig config = build_run_config(s.app, rf);
      Pipeline::Logger log;
      if (!rf.quiet) log = [](const std::string& msg) { fmt::print(stderr, "[probekit] {}\n", msg); };
      Pipeline p(config, log);
      const std::string name = s.name;
      if (name == "sweep") {
        p.run_split();
        p.run_sweep();
      } else if (name == "controls") {
        p.run_controls();
      } else if (name == "extract") {
        p.run_extract();
      } else if (name == "annotate") {
        p.run_annotate();
      } else if (name == "stats") {
        p.run_stats();
      } else if (name == "report") {
        p.run_report();
      } else {
        p.run_all();
      }
      fmt::print("{}: done ({}), outputs in {}\n", name, p.run_id(), config.out_dir.string());
    }
    return 0;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return 2;
  } catch (const DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 4;
  }
}
