#include "probekit/signal_extraction.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace probekit {

std::string_view to_string(OverlapMode m) {
  return m == OverlapMode::kGreedyNonOverlap ? "greedy_non_overlap" : "per_anchor";
}

OverlapMode parse_overlap_mode(std::string_view s) {
  if (s == "greedy_non_overlap") return OverlapMode::kGreedyNonOverlap;
  if (s == "per_anchor") return OverlapMode::kPerAnchor;
  throw ConfigError("unknown overlap mode: " + std::string(s));
}

void ExtractionConfig::validate() const {
  if (sampled_layers.empty()) throw ConfigError("extraction needs at least one sampled layer");
  if (std::find(sampled_layers.begin(), sampled_layers.end(), reference_layer) == sampled_layers.end()) {
    throw ConfigError("reference layer " + std::to_string(reference_layer) + " is not sampled");
  }
  if (window_width < 1 || window_width % 2 == 0) throw ConfigError("window width must be odd");
  for (double q : {single_quantile, window_quantile}) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantiles must lie in (0, 1)");
  }
}

double order_statistic_threshold(std::vector<double> abs_values, double q) {
  const std::size_t n = abs_values.size();
  const auto needed = static_cast<std::size_t>(std::ceil(1.0 / q - 1e-9));
  if (n < needed) {
    throw std::invalid_argument("threshold calibration needs " + std::to_string(needed) +
                                " scores, got " + std::to_string(n));
  }
  auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);
  for (double& v : abs_values) v = std::abs(v);
  std::nth_element(abs_values.begin(), abs_values.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   abs_values.end(), std::greater<>());
  return abs_values[k - 1];
}

Thresholds calibrate_thresholds(const std::vector<std::vector<double>>& reference_scores,
                                const ExtractionConfig& config) {
  config.validate();
  std::vector<double> tokens;
  std::vector<double> windows;
  for (const auto& scores : reference_scores) {
    tokens.insert(tokens.end(), scores.begin(), scores.end());
    for (const auto& w : window_scan(scores, config.window_width)) windows.push_back(w.mean_abs_score);
  }
  Thresholds t;
  t.n_token_scores = tokens.size();
  t.n_window_scores = windows.size();
  t.tau_single = order_statistic_threshold(std::move(tokens), config.single_quantile);
  t.tau_window = order_statistic_threshold(std::move(windows), config.window_quantile);
  return t;
}

std::vector<WindowRecord> window_scan(std::span<const double> scores, int width,
                                      const std::string& example_id, int layer) {
  std::vector<WindowRecord> out;
  if (width < 1) throw std::invalid_argument("window width must be positive");
  const int n = static_cast<int>(scores.size());
  for (int start = 0; start + width <= n; ++start) {
    WindowRecord w;
    w.example_id = example_id;
    w.layer = layer;
    w.start = start;
    w.width = width;
    w.focus_index = start + (width - 1) / 2;
    w.token_scores.assign(scores.begin() + start, scores.begin() + start + width);
    double sum = 0.0;
    for (double s : w.token_scores) sum += std::abs(s);
    w.mean_abs_score = sum / width;
    w.focus_score = scores[static_cast<std::size_t>(w.focus_index)];
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<WindowRecord> select_windows(std::vector<WindowRecord> candidates, double tau_window,
                                         OverlapMode mode) {
  std::erase_if(candidates, [&](const WindowRecord& w) { return !(w.mean_abs_score >= tau_window); });
  std::vector<WindowRecord> kept;
  if (mode == OverlapMode::kPerAnchor) {
    kept = std::move(candidates);
  } else {
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
      if (a.mean_abs_score != b.mean_abs_score) return a.mean_abs_score > b.mean_abs_score;
      return a.start < b.start;
    });
    for (auto& c : candidates) {
      const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const WindowRecord& k) {
        return c.start <= k.end() && k.start <= c.end();
      });
      if (!overlaps) kept.push_back(std::move(c));
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  return kept;
}

std::vector<TokenSelection> select_single_tokens(std::span<const double> scores, double tau_single,
                                                 std::span<const WindowRecord> retained,
                                                 const std::string& example_id, int layer) {
  std::set<int> anchors;
  for (const auto& w : retained) anchors.insert(w.focus_index);
  std::vector<TokenSelection> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int idx = static_cast<int>(i);
    if (std::abs(scores[i]) >= tau_single && !anchors.count(idx)) {
      out.push_back({example_id, layer, idx, scores[i]});
    }
  }
  return out;
}

LayerScores score_sampled_layers(const ActivationStore& store, std::span<const ExampleMeta> meta,
                                 const Split& split, Target target, const ProbeConfig& probe_config,
                                 const ExtractionConfig& config) {
  config.validate();
  for (int layer : config.sampled_layers) {
    if (layer < 0 || static_cast<std::size_t>(layer) >= store.n_layers()) {
      throw ConfigError("sampled layer " + std::to_string(layer) + " is outside the store's " +
                        std::to_string(store.n_layers()) + " layers");
    }
  }
  const std::vector<std::string> all_ids = store.ids();
  std::vector<ProbeModel> models(config.sampled_layers.size());
  std::vector<std::map<std::string, std::vector<double>>> scores(config.sampled_layers.size());
  parallel_for(config.sampled_layers.size(), [&](std::size_t i) {
    const int layer = config.sampled_layers[i];
    models[i] = train_token_probe(store, meta, target, split.train_ids, layer, probe_config);
    for (const auto& id : all_ids) scores[i][id] = example_token_scores(models[i], store, id);
  });
  LayerScores out;
  out.target = target;
  for (std::size_t i = 0; i < config.sampled_layers.size(); ++i) {
    out.models[config.sampled_layers[i]] = std::move(models[i]);
    out.scores[config.sampled_layers[i]] = std::move(scores[i]);
  }
  return out;
}

ExtractionResult run_extraction(const LayerScores& scores, std::span<const std::string> calibration_ids,
                                const ExtractionConfig& config) {
  config.validate();
  ExtractionResult out;
  const auto& reference = scores.scores.at(config.reference_layer);
  std::vector<std::vector<double>> reference_scores;
  for (const auto& id : calibration_ids) {
    const auto it = reference.find(id);
    if (it == reference.end()) throw std::out_of_range("no reference-layer scores for " + id);
    reference_scores.push_back(it->second);
    out.calibration_ids.push_back(id);
  }
  out.thresholds = calibrate_thresholds(reference_scores, config);

  std::vector<int> layers = config.sampled_layers;
  std::sort(layers.begin(), layers.end());
  for (int layer : layers) {
    LayerExtractionStats stats{layer, out.thresholds.tau_single, out.thresholds.tau_window, 0, 0};
    for (const auto& [id, s] : scores.scores.at(layer)) {
      auto windows = select_windows(window_scan(s, config.window_width, id, layer),
                                    stats.tau_window, config.overlap);
      auto singles = select_single_tokens(s, stats.tau_single, windows, id, layer);
      stats.n_windows += windows.size();
      stats.n_singles += singles.size();
      std::move(windows.begin(), windows.end(), std::back_inserter(out.windows));
      std::move(singles.begin(), singles.end(), std::back_inserter(out.singles));
    }
    out.per_layer.push_back(stats);
  }
  return out;
}

void to_json(nlohmann::json& j, const ExtractionConfig& c) {
  j = {{"sampled_layers", c.sampled_layers},
       {"reference_layer", c.reference_layer},
       {"window_width", c.window_width},
       {"single_quantile", c.single_quantile},
       {"window_quantile", c.window_quantile},
       {"overlap", to_string(c.overlap)},
       {"calibrate_on_train", c.calibrate_on_train}};
}

void from_json(const nlohmann::json& j, ExtractionConfig& c) {
  c.sampled_layers = j.value("sampled_layers", c.sampled_layers);
  c.reference_layer = j.value("reference_layer", c.reference_layer);
  c.window_width = j.value("window_width", c.window_width);
  c.single_quantile = j.value("single_quantile", c.single_quantile);
  c.window_quantile = j.value("window_quantile", c.window_quantile);
  if (j.contains("overlap")) c.overlap = parse_overlap_mode(j.at("overlap").get<std::string>());
  c.calibrate_on_train = j.value("calibrate_on_train", c.calibrate_on_train);
}

void to_json(nlohmann::json& j, const WindowRecord& w) {
  j = {{"example_id", w.example_id},
       {"layer", w.layer},
       {"start", w.start},
       {"end", w.end()},
       {"focus_index", w.focus_index},
       {"mean_abs_score", w.mean_abs_score},
       {"token_scores", w.token_scores},
       {"focus_score", w.focus_score}};
}

void from_json(const nlohmann::json& j, WindowRecord& w) {
  w.example_id = j.at("example_id").get<std::string>();
  w.layer = j.at("layer").get<int>();
  w.start = j.at("start").get<int>();
  w.width = j.at("end").get<int>() - w.start + 1;
  w.focus_index = j.at("focus_index").get<int>();
  w.mean_abs_score = j.at("mean_abs_score").get<double>();
  w.token_scores = j.at("token_scores").get<std::vector<double>>();
  w.focus_score = j.at("focus_score").get<double>();
}

void to_json(nlohmann::json& j, const TokenSelection& s) {
  j = {{"example_id", s.example_id}, {"layer", s.layer}, {"token_index", s.token_index}, {"score", s.score}};
}

void from_json(const nlohmann::json& j, TokenSelection& s) {
  s.example_id = j.at("example_id").get<std::string>();
  s.layer = j.at("layer").get<int>();
  s.token_index = j.at("token_index").get<int>();
  s.score = j.at("score").get<double>();
}

}  // namespace probekit
