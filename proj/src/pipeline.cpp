#include "probekit/pipeline.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace probekit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";

json opt_path(const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); }

template <class T>
void write_jsonl(const fs::path& path, const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) out += json(item).dump() + "\n";
  write_file(path, out);
}

template <class T>
std::vector<T> read_jsonl(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<T> out;
  std::size_t line_no = 0;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const json::exception& e) {
      throw DataError(DataError::Kind::kFormat, path.filename().string(),
                      fmt::format("{}:{}: {}", path.filename().string(), line_no, e.what()));
    }
  }
  return out;
}

json read_json_or_null(const fs::path& path) { return fs::exists(path) ? read_json(path) : json(nullptr); }

std::string target_key(Target t) { return std::string(to_string(t)); }

json dataset_summary(const JoinedDataset& d) {
  const auto ok = d.ok_rows();
  std::size_t n_a = 0;
  json by_layer = json::object();
  json by_cohort = json::object();
  for (const auto& o : ok) {
    if (o.nationality == Nationality::kA) ++n_a;
    auto& layer = by_layer[std::to_string(o.layer)];
    layer = layer.is_null() ? 1 : layer.get<std::size_t>() + 1;
    auto& cohort = by_cohort[derive_cohort(o.nationality, o.medium, o.role)];
    cohort = cohort.is_null() ? 1 : cohort.get<std::size_t>() + 1;
  }
  return {{"n_input", d.n_input},   {"n_unaligned", d.n_unaligned}, {"n_ok", ok.size()},
          {"n_a", n_a},             {"n_b", ok.size() - n_a},       {"by_layer", by_layer},
          {"by_cohort", by_cohort}};
}

json unannotated_summary(std::size_t n_input) {
  return {{"n_input", n_input}, {"n_unaligned", nullptr}, {"n_ok", nullptr}, {"n_a", nullptr},
          {"n_b", nullptr},     {"by_layer", nullptr},    {"by_cohort", nullptr}};
}

json dataset_stats(const std::vector<Observation>& rows, Domain domain, bool yates, json& notices,
                   const std::string& name) {
  json out;
  json variables = json::object();
  for (Variable v : kAllVariables) {
    const std::string key(to_string(v));
    try {
      variables[key] = nationality_test(rows, v, yates);
    } catch (const std::invalid_argument& e) {
      variables[key] = nullptr;
      notices.push_back(fmt::format("{} {}: {}", name, key, e.what()));
    }
  }
  out["variables"] = variables;
  try {
    out["hypotheses"] = run_hypotheses(rows, yates);
  } catch (const std::invalid_argument& e) {
    out["hypotheses"] = nullptr;
    notices.push_back(fmt::format("{} hypotheses: {}", name, e.what()));
  }
  try {
    out["domain"] = domain_contrast(rows, domain, yates);
  } catch (const std::invalid_argument& e) {
    out["domain"] = nullptr;
    notices.push_back(fmt::format("{} domain contrast: {}", name, e.what()));
  }

  std::map<std::string, std::int64_t> counts_a, counts_b;
  for (const auto& o : rows) {
    auto& counts = o.nationality == Nationality::kA ? counts_a : counts_b;
    ++counts[to_lower_ascii(o.lemma)];
  }
  const auto entries = log_odds_tokens(counts_a, counts_b);
  constexpr std::size_t kTop = 10;
  json top_a = json::array(), top_b = json::array();
  for (std::size_t i = 0; i < std::min(kTop, entries.size()); ++i) {
    if (entries[i].log_odds > 0) top_a.push_back(entries[i]);
    const auto& tail = entries[entries.size() - 1 - i];
    if (tail.log_odds < 0) top_b.push_back(tail);
  }
  out["log_odds"] = {{"a_distinctive", top_a}, {"b_distinctive", top_b}};
  return out;
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kSplit: return "split";
    case Stage::kSweep: return "sweep";
    case Stage::kControls: return "controls";
    case Stage::kExtract: return "extract";
    case Stage::kAnnotate: return "annotate";
    case Stage::kStats: return "stats";
    case Stage::kReport: return "report";
  }
  return "split";
}

Stage parse_stage(std::string_view s) {
  for (Stage st : kAllStages) {
    if (to_string(st) == s) return st;
  }
  throw ConfigError("unknown stage: " + std::string(s));
}

void RunConfig::validate() const {
  if (corpus_dir.empty()) throw ConfigError("corpus_dir is required");
  if (out_dir.empty()) throw ConfigError("out_dir is required");
  probe.validate();
  extraction.validate();
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must be in (0, 1)");
  if (n_permutations < 1) throw ConfigError("n_permutations must be at least 1");
  if (probe_targets.empty()) throw ConfigError("probe_targets is empty");
  std::set<Target> seen(probe_targets.begin(), probe_targets.end());
  if (seen.size() != probe_targets.size()) throw ConfigError("probe_targets has duplicates");
  if (target == Target::kCohort6) throw ConfigError("token extraction needs a binary target");
}

ProbeConfig RunConfig::effective_probe() const {
  ProbeConfig p = probe;
  p.seed = probe_seed();
  return p;
}

fs::path RunConfig::effective_tokens_path() const {
  return tokens_path ? *tokens_path : corpus_dir / "tokens.jsonl";
}

void to_json(json& j, const RunConfig& c) {
  json targets = json::array();
  for (Target t : c.probe_targets) targets.push_back(to_string(t));
  json skip = json::array();
  for (Stage s : c.skip) skip.push_back(to_string(s));
  j = {{"corpus_dir", c.corpus_dir.string()},
       {"out_dir", c.out_dir.string()},
       {"tokens_path", opt_path(c.tokens_path)},
       {"lexicon_dir", opt_path(c.lexicon_dir)},
       {"target", to_string(c.target)},
       {"probe_targets", targets},
       {"probe", c.probe},
       {"extraction", c.extraction},
       {"split_ratio", c.split_ratio},
       {"stratify", to_string(c.stratify)},
       {"n_permutations", c.n_permutations},
       {"yates", c.yates},
       {"window_stance", to_string(c.window_stance)},
       {"contrast_domain", to_string(c.contrast_domain)},
       {"seed", c.seed},
       {"run_id", c.run_id},
       {"skip", skip}};
}

void from_json(const json& j, RunConfig& c) {
  static const std::set<std::string> kKeys = {
      "corpus_dir", "out_dir",  "tokens_path", "lexicon_dir",    "target", "probe_targets",
      "probe",      "extraction", "split_ratio", "stratify",     "n_permutations", "yates",
      "window_stance", "contrast_domain", "seed", "run_id", "skip"};
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!kKeys.count(k)) throw ConfigError("unknown run config key: " + k);
  }
  auto path_of = [&](const char* key) -> std::optional<fs::path> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return fs::path(j[key].get<std::string>());
  };
  try {
    if (auto p = path_of("corpus_dir")) c.corpus_dir = *p;
    if (auto p = path_of("out_dir")) c.out_dir = *p;
    if (j.contains("tokens_path")) c.tokens_path = path_of("tokens_path");
    if (j.contains("lexicon_dir")) c.lexicon_dir = path_of("lexicon_dir");
    if (j.contains("target")) c.target = parse_target(j["target"].get<std::string>());
    if (j.contains("probe_targets")) {
      c.probe_targets.clear();
      for (const auto& t : j["probe_targets"]) c.probe_targets.push_back(parse_target(t.get<std::string>()));
    }
    if (j.contains("probe")) j["probe"].get_to(c.probe);
    if (j.contains("extraction")) j["extraction"].get_to(c.extraction);
    c.split_ratio = j.value("split_ratio", c.split_ratio);
    if (j.contains("stratify")) c.stratify = parse_stratify_key(j["stratify"].get<std::string>());
    c.n_permutations = j.value("n_permutations", c.n_permutations);
    c.yates = j.value("yates", c.yates);
    if (j.contains("window_stance")) c.window_stance = parse_window_stance_mode(j["window_stance"].get<std::string>());
    if (j.contains("contrast_domain")) c.contrast_domain = parse_domain(j["contrast_domain"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.run_id = j.value("run_id", c.run_id);
    if (j.contains("skip")) {
      c.skip.clear();
      for (const auto& s : j["skip"]) c.skip.insert(parse_stage(s.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
}

json split_to_json(const Split& s) {
  return {{"ratio", s.ratio},
          {"seed", s.seed},
          {"key", to_string(s.key)},
          {"train_ids", s.train_ids},
          {"test_ids", s.test_ids}};
}

Split split_from_json(const json& j) {
  Split s;
  s.ratio = j.at("ratio").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.key = parse_stratify_key(j.at("key").get<std::string>());
  s.train_ids = j.at("train_ids").get<std::vector<std::string>>();
  s.test_ids = j.at("test_ids").get<std::vector<std::string>>();
  return s;
}

json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(DataError::Kind::kFormat, path.filename().string(), path.string() + ": " + e.what());
  }
}

// --- Pipeline ----------------------------------------------------------------------------

Pipeline::Pipeline(RunConfig config, Logger log) : config_(std::move(config)), log_(std::move(log)) {
  config_.validate();
}

void Pipeline::log(const std::string& msg) const {
  if (log_) log_(msg);
}

template <class F>
auto Pipeline::guarded(Stage stage, F&& body) {
  const std::string name(to_string(stage));
  log("stage " + name);
  auto mark_failed = [&](const std::string& cause) {
    try {
      fs::create_directories(config_.out_dir);
      write_file(path("FAILED"), name + ": " + cause + "\n");
    } catch (const std::exception&) {
      // The original error is more useful than a marker write failure.
    }
  };
  try {
    return body();
  } catch (const ConfigError& e) {
    mark_failed(e.what());
    throw;
  } catch (const DataError& e) {
    mark_failed(e.what());
    throw;
  } catch (const StageError& e) {
    mark_failed(e.what());
    throw;
  } catch (const std::exception& e) {
    mark_failed(e.what());
    throw StageError(name, e.what());
  }
}

const Corpus& Pipeline::corpus() {
  if (!corpus_) {
    log("loading corpus " + config_.corpus_dir.string());
    corpus_ = load_corpus(config_.corpus_dir);
  }
  return *corpus_;
}

std::vector<ExampleMeta> Pipeline::meta() {
  if (corpus_) return corpus_->meta;
  auto m = read_meta_jsonl(config_.corpus_dir / "meta.jsonl");
  std::sort(m.begin(), m.end(), [](const auto& a, const auto& b) { return a.example_id < b.example_id; });
  return m;
}

Split Pipeline::split() { return make_split(meta(), config_.split_ratio, config_.stratify, config_.split_seed()); }

LexiconSet Pipeline::lexicons() const {
  return config_.lexicon_dir ? LexiconSet::load(*config_.lexicon_dir) : LexiconSet::defaults();
}

json Pipeline::input_hashes() {
  if (!input_hashes_) {
    const auto m = meta();
    std::string actd_hashes;
    for (const auto& e : m) actd_hashes += sha256_file(config_.corpus_dir / (e.example_id + ".actd"));
    const fs::path tokens = config_.effective_tokens_path();
    input_hashes_ = json{{"meta_sha256", sha256_file(config_.corpus_dir / "meta.jsonl")},
                         {"activations_sha256", sha256_hex(actd_hashes)},
                         {"n_activation_files", m.size()},
                         {"tokens_sha256", fs::exists(tokens) ? json(sha256_file(tokens)) : json(nullptr)}};
  }
  return *input_hashes_;
}

std::string Pipeline::run_id() {
  if (!config_.run_id.empty()) return config_.run_id;
  json c = config_;
  for (const char* k : {"corpus_dir", "out_dir", "tokens_path", "lexicon_dir", "run_id", "skip"}) c.erase(k);
  return "run-" + sha256_hex(c.dump() + input_hashes().dump()).substr(0, 12);
}

json Pipeline::provenance() {
  json c = config_;
  for (const char* k : {"corpus_dir", "out_dir", "tokens_path", "lexicon_dir"}) c.erase(k);
  const json extraction = read_json_or_null(path("extraction.json"));
  json thresholds = nullptr;
  if (extraction.is_object()) {
    thresholds = {{"tau_single", extraction["thresholds"]["tau_single"]},
                  {"tau_window", extraction["thresholds"]["tau_window"]},
                  {"reference_layer", extraction["config"]["reference_layer"]},
                  {"calibration_split", extraction["calibration_split"]}};
  }
  json artifacts = json::array();
  for (const char* a : {"corpus.json", "split.json", "sweep.json", "controls.json", "extraction.json",
                        "windows.jsonl", "singles.jsonl", "annotation.json", "annotated.jsonl", "sentences.jsonl",
                        "stats.json"}) {
    if (fs::exists(path(a))) artifacts.push_back(a);
  }
  return {{"run_id", run_id()},
          {"tool", {{"name", "probekit"}, {"version", kToolVersion}}},
          {"seed", config_.seed},
          {"derived_seeds",
           {{"split", config_.split_seed()},
            {"probe", config_.probe_seed()},
            {"permutations", config_.permutation_seed()}}},
          {"inputs", input_hashes()},
          {"lexicon_hash", lexicons().hash()},
          {"thresholds", thresholds},
          {"flags",
           {{"yates", config_.yates},
            {"window_stance", to_string(config_.window_stance)},
            {"calibrate_on_train", config_.extraction.calibrate_on_train},
            {"overlap", to_string(config_.extraction.overlap)},
            {"stratify", to_string(config_.stratify)}}},
          {"config", c},
          {"artifacts", artifacts}};
}

void Pipeline::run_split() {
  guarded(Stage::kSplit, [&] {
    fs::create_directories(config_.out_dir);
    const auto m = meta();
    const Split s = split();
    write_file(path("split.json"), split_to_json(s).dump(2) + "\n");

    std::map<std::string, std::size_t> cohorts;
    std::size_t n_a = 0;
    for (const auto& e : m) {
      ++cohorts[e.cohort];
      if (e.nationality == Nationality::kA) ++n_a;
    }
    std::string note;
    for (const auto& [cohort, n] : cohorts) note += fmt::format("{}{} {}", note.empty() ? "" : "; ", cohort, n);
    const json summary = {{"n_examples", m.size()},
                          {"n_a", n_a},
                          {"n_b", m.size() - n_a},
                          {"cohorts", cohorts},
                          {"cohort_note", note},
                          {"n_train", s.train_ids.size()},
                          {"n_test", s.test_ids.size()}};
    write_file(path("corpus.json"), summary.dump(2) + "\n");
  });
}

void Pipeline::run_sweep() {
  guarded(Stage::kSweep, [&] {
    fs::create_directories(path("probes"));
    const Corpus& c = corpus();
    const Split s = split();
    const ProbeConfig probe = config_.effective_probe();
    json sweeps = json::object();
    for (Target t : config_.probe_targets) {
      log("sweep " + target_key(t));
      const LayerSweepResult sweep = layer_sweep(c.store, c.meta, t, s, probe);
      sweeps[target_key(t)] = sweep;
      ProbeModel model = train_centroid_probe(c.store, c.meta, t, s.train_ids, sweep.best_layer, probe);
      model.cv = sweep.per_layer[static_cast<std::size_t>(sweep.best_layer)];
      write_file(path("probes/" + target_key(t) + ".json"), json(model).dump() + "\n");
    }
    write_file(path("sweep.json"), sweeps.dump(2) + "\n");
  });
}

void Pipeline::run_controls() {
  guarded(Stage::kControls, [&] {
    const Corpus& c = corpus();
    const Split s = split();
    const ProbeConfig probe = config_.effective_probe();
    const json sweeps = read_json(path("sweep.json"));
    json controls = json::object();
    for (Target t : config_.probe_targets) {
      const std::string key = target_key(t);
      log("controls " + key);
      if (!sweeps.contains(key)) {
        throw DataError(DataError::Kind::kMissingFile, "sweep.json", "sweep.json has no entry for " + key);
      }
      const LayerSweepResult sweep = sweeps[key].get<LayerSweepResult>();
      const ProbeModel model = read_json(path("probes/" + key + ".json")).get<ProbeModel>();
      const int layer = sweep.best_layer;
      const double cv_mean = sweep.per_layer[static_cast<std::size_t>(layer)].mean_acc;

      const HoldoutResult holdout = holdout_eval(model, c.store, c.meta, s);
      const LabeledIds labeled = labels_for(c.meta, t, s.train_ids);
      const Eigen::MatrixXd X = centroid_matrix(c.store, labeled.ids, static_cast<std::size_t>(layer));
      const auto n_classes = static_cast<int>(labeled.class_order.size());
      const ShuffleBaseline shuffle = shuffled_baseline(X, labeled.y, n_classes, probe, config_.n_permutations,
                                                        derive_seed(config_.permutation_seed(), static_cast<std::uint64_t>(t)));
      const SkylineResult sky = skyline(c.meta, t, s, probe);

      json transfer = nullptr;
      json transfer_error = nullptr;
      try {
        transfer = cross_family_transfer(c.store, c.meta, layer, probe, t);
      } catch (const std::invalid_argument& e) {
        transfer_error = e.what();
      }
      controls[key] = {{"layer", layer},
                       {"cv_mean_acc", cv_mean},
                       {"holdout", {{"accuracy", holdout.accuracy}, {"n_test", holdout.n_test}}},
                       {"shuffle", shuffle},
                       {"selectivity", selectivity(cv_mean, shuffle.mean_shuffled_acc)},
                       {"skyline", sky},
                       {"transfer", transfer},
                       {"transfer_error", transfer_error}};
    }
    write_file(path("controls.json"), controls.dump(2) + "\n");
  });
}

void Pipeline::run_extract() {
  guarded(Stage::kExtract, [&] {
    const Corpus& c = corpus();
    for (int l : config_.extraction.sampled_layers) {
      if (l < 0 || static_cast<std::size_t>(l) >= c.store.n_layers()) {
        throw ConfigError(fmt::format("sampled layer {} outside the corpus's {} layers", l, c.store.n_layers()));
      }
    }
    const Split s = split();
    const LayerScores scores =
        score_sampled_layers(c.store, c.meta, s, config_.target, config_.effective_probe(), config_.extraction);
    std::vector<std::string> calibration_ids;
    const auto& candidates = config_.extraction.calibrate_on_train ? s.train_ids : c.store.ids();
    for (const auto& id : candidates) {
      if (label_of(c.find(id), config_.target)) calibration_ids.push_back(id);
    }
    const ExtractionResult result = run_extraction(scores, calibration_ids, config_.extraction);
    write_jsonl(path("windows.jsonl"), result.windows);
    write_jsonl(path("singles.jsonl"), result.singles);

    json per_layer = json::array();
    for (const auto& p : result.per_layer) {
      per_layer.push_back({{"layer", p.layer},
                           {"tau_single", p.tau_single},
                           {"tau_window", p.tau_window},
                           {"n_windows", p.n_windows},
                           {"n_singles", p.n_singles}});
    }
    json probes = json::object();
    for (const auto& [layer, model] : scores.models) {
      probes[std::to_string(layer)] = {{"n_training_examples", model.training_ids.size()},
                                       {"iterations", model.optimizer.iterations},
                                       {"objective", model.optimizer.objective},
                                       {"grad_max_abs", model.optimizer.grad_max_abs},
                                       {"converged", model.optimizer.converged}};
    }
    const json summary = {{"target", to_string(config_.target)},
                          {"config", config_.extraction},
                          {"calibration_split", config_.extraction.calibrate_on_train ? "train" : "all"},
                          {"n_calibration_ids", calibration_ids.size()},
                          {"thresholds",
                           {{"tau_single", result.thresholds.tau_single},
                            {"tau_window", result.thresholds.tau_window},
                            {"n_token_scores", result.thresholds.n_token_scores},
                            {"n_window_scores", result.thresholds.n_window_scores}}},
                          {"per_layer", per_layer},
                          {"n_windows", result.windows.size()},
                          {"n_singles", result.singles.size()},
                          {"token_probes", probes}};
    write_file(path("extraction.json"), summary.dump(2) + "\n");
  });
}

void Pipeline::run_annotate() {
  guarded(Stage::kAnnotate, [&] {
    fs::create_directories(config_.out_dir);
    const fs::path tokens_path = config_.effective_tokens_path();
    const LexiconSet lex = lexicons();
    if (!fs::exists(tokens_path)) {
      log("no tokens.jsonl; annotation skipped");
      fs::remove(path("annotated.jsonl"));
      fs::remove(path("sentences.jsonl"));
      write_file(path("annotation.json"),
                 json({{"annotated", false}, {"reason", "no tokens.jsonl"}, {"lexicon_hash", lex.hash()}}).dump(2) +
                     "\n");
      return;
    }
    const auto tokens = read_tokens_jsonl(tokens_path);
    const auto annotated = annotate_tokens(tokens, lex);
    const auto sentences = sentence_baseline(annotated);
    write_jsonl(path("annotated.jsonl"), annotated);
    write_jsonl(path("sentences.jsonl"), sentences);

    std::map<std::string, std::size_t> quality, reasons;
    for (const auto& a : annotated) {
      ++quality[std::string(to_string(a.quality))];
      if (!a.reason.empty()) ++reasons[a.reason];
    }
    const json summary = {{"annotated", true},
                          {"tokens_sha256", sha256_file(tokens_path)},
                          {"lexicon_hash", lex.hash()},
                          {"n_tokens", annotated.size()},
                          {"n_sentences", sentences.size()},
                          {"quality", quality},
                          {"reasons", reasons}};
    write_file(path("annotation.json"), summary.dump(2) + "\n");
  });
}

void Pipeline::run_stats() {
  guarded(Stage::kStats, [&] {
    const auto m = meta();
    const auto windows = read_jsonl<WindowRecord>(path("windows.jsonl"));
    const auto singles = read_jsonl<TokenSelection>(path("singles.jsonl"));
    const json annotation = read_json_or_null(path("annotation.json"));
    const bool annotated = annotation.is_object() && annotation.value("annotated", false);

    json stats = {{"annotated", annotated},
                  {"yates", config_.yates},
                  {"window_stance", to_string(config_.window_stance)},
                  {"contrast_domain", to_string(config_.contrast_domain)}};
    json notices = json::array();
    if (!annotated) {
      notices.push_back("skipped: no annotations");
      stats["datasets"] = {{"windows", unannotated_summary(windows.size())},
                           {"singles", unannotated_summary(singles.size())},
                           {"sentences", unannotated_summary(0)}};
      stats["datasets"]["sentences"]["n_input"] = nullptr;
      stats["windows"] = nullptr;
      stats["singles"] = nullptr;
      stats["confounds"] = nullptr;
      stats["sentences"] = nullptr;
      stats["trajectory"] = layer_trajectory(windows, m, nullptr, config_.contrast_domain, config_.yates);
    } else {
      const auto annotated_tokens = read_jsonl<AnnotatedToken>(path("annotated.jsonl"));
      const auto sentences = read_jsonl<SentenceRecord>(path("sentences.jsonl"));
      const JoinedDataset jw = join_windows(windows, annotated_tokens, m, config_.window_stance);
      const JoinedDataset js = join_singles(singles, annotated_tokens, m);
      const auto window_rows = jw.ok_rows();
      const auto single_rows = js.ok_rows();
      const SentenceTests st = sentence_tests(sentences, m, config_.yates);

      stats["datasets"] = {{"windows", dataset_summary(jw)},
                           {"singles", dataset_summary(js)},
                           {"sentences",
                            {{"n_input", st.n_input},
                             {"n_unaligned", nullptr},
                             {"n_ok", st.n_ok},
                             {"n_a", st.n_a},
                             {"n_b", st.n_b},
                             {"by_layer", nullptr},
                             {"by_cohort", nullptr}}}};
      stats["windows"] = dataset_stats(window_rows, config_.contrast_domain, config_.yates, notices, "windows");
      stats["singles"] = dataset_stats(single_rows, config_.contrast_domain, config_.yates, notices, "singles");
      stats["confounds"] = confound_suite(window_rows, config_.yates);
      stats["sentences"] = st;
      stats["trajectory"] = layer_trajectory(windows, m, &window_rows, config_.contrast_domain, config_.yates);
    }
    stats["notices"] = notices;
    write_file(path("stats.json"), stats.dump(2) + "\n");
  });
}

Report Pipeline::run_report() {
  return guarded(Stage::kReport, [&] {
    ReportInputs in;
    in.corpus = read_json_or_null(path("corpus.json"));
    in.sweeps = read_json_or_null(path("sweep.json"));
    in.controls = read_json_or_null(path("controls.json"));
    in.extraction = read_json_or_null(path("extraction.json"));
    in.stats = read_json_or_null(path("stats.json"));
    in.provenance = provenance();
    Report report = assemble_report(in);
    emit_report(report, config_.out_dir);

    if (in.sweeps.is_object()) {
      std::vector<Series> series;
      for (const auto& [target, sweep] : in.sweeps.items()) {
        Series s{target, {}};
        const auto& layers = sweep["per_layer"];
        for (std::size_t l = 0; l < layers.size(); ++l) {
          s.points.emplace_back(static_cast<double>(l), layers[l]["mean_acc"].get<double>());
        }
        series.push_back(std::move(s));
      }
      write_file(path("sweep_accuracy.svg"),
                 render_line_svg("Cross-validated probe accuracy by layer", "layer", "accuracy", series));
    }
    if (in.stats.is_object() && in.stats["trajectory"].is_array()) {
      Series gap{"score gap", {}};
      for (const auto& r : in.stats["trajectory"]) {
        if (!r["skipped"].get<bool>()) gap.points.emplace_back(r["layer"].get<double>(), r["score_gap"].get<double>());
      }
      write_file(path("score_gap.svg"), render_line_svg("Decision-score gap by layer", "layer", "gap", {gap}));
    }
    return report;
  });
}

Report Pipeline::run_all() {
  fs::create_directories(config_.out_dir);
  fs::remove(path("FAILED"));
  const std::pair<Stage, void (Pipeline::*)()> stages[] = {
      {Stage::kSplit, &Pipeline::run_split},       {Stage::kSweep, &Pipeline::run_sweep},
      {Stage::kControls, &Pipeline::run_controls}, {Stage::kExtract, &Pipeline::run_extract},
      {Stage::kAnnotate, &Pipeline::run_annotate}, {Stage::kStats, &Pipeline::run_stats},
  };
  for (const auto& [stage, fn] : stages) {
    if (config_.skip.count(stage)) {
      log(fmt::format("stage {} skipped", to_string(stage)));
      continue;
    }
    (this->*fn)();
  }
  return run_report();
}

Report run_pipeline(const RunConfig& config, Pipeline::Logger log) {
  Pipeline p(config, std::move(log));
  return p.run_all();
}

}  // namespace probekit
