#pragma once

// High-signal token extraction: thresholds calibrated once at a reference
// layer, sliding windows with overlap resolution, and single tokens that are
// not window anchors.

#include <map>
#include <string>
#include <vector>

#include "probekit/probe_engine.hpp"

namespace probekit {

enum class OverlapMode {
  kGreedyNonOverlap,  // retained windows never share a token
  kPerAnchor,         // every super-threshold window is kept (one per focus position)
};

std::string_view to_string(OverlapMode m);
OverlapMode parse_overlap_mode(std::string_view s);

struct ExtractionConfig {
  std::vector<int> sampled_layers{2, 10, 18, 24, 30, 33};
  int reference_layer = 24;
  int window_width = 5;
  double single_quantile = 0.025;
  double window_quantile = 0.05;
  OverlapMode overlap = OverlapMode::kGreedyNonOverlap;
  /// Calibrate on train-split examples only (otherwise on every example).
  bool calibrate_on_train = true;

  /// Throws ConfigError unless the reference layer is sampled, the width is
  /// odd and positive, and both quantiles lie in (0, 1).
  void validate() const;
};

struct WindowRecord {
  std::string example_id;
  int layer = 0;
  int start = 0;
  int width = 0;
  int focus_index = 0;  // start + (width - 1) / 2
  double mean_abs_score = 0.0;
  std::vector<double> token_scores;
  double focus_score = 0.0;

  int end() const { return start + width - 1; }
};

struct TokenSelection {
  std::string example_id;
  int layer = 0;
  int token_index = 0;
  double score = 0.0;
};

/// The k-th largest of |values| with k = ceil(q * n). Throws
/// std::invalid_argument when n < ceil(1 / q).
double order_statistic_threshold(std::vector<double> abs_values, double q);

struct Thresholds {
  double tau_single = 0.0;
  double tau_window = 0.0;
  std::size_t n_token_scores = 0;
  std::size_t n_window_scores = 0;
};

/// Per-example score vectors at the reference layer. tau_window uses the
/// mean-abs of every candidate window in those examples.
Thresholds calibrate_thresholds(const std::vector<std::vector<double>>& reference_scores,
                                const ExtractionConfig& config);

/// One candidate per start position 0..n-width; empty when n < width.
std::vector<WindowRecord> window_scan(std::span<const double> scores, int width,
                                      const std::string& example_id = {}, int layer = 0);

/// Candidates with mean_abs_score >= tau. Greedy mode visits them by
/// descending mean_abs_score (ties: lower start) and drops any that share a
/// token with a retained window. Result sorted by start.
std::vector<WindowRecord> select_windows(std::vector<WindowRecord> candidates, double tau_window,
                                         OverlapMode mode = OverlapMode::kGreedyNonOverlap);

/// Tokens with |score| >= tau, excluding focus anchors of retained windows.
std::vector<TokenSelection> select_single_tokens(std::span<const double> scores, double tau_single,
                                                 std::span<const WindowRecord> retained,
                                                 const std::string& example_id = {}, int layer = 0);

/// Token scores per sampled layer and example, from a token probe trained on
/// the split's train examples at that layer.
struct LayerScores {
  Target target = Target::kNationality;
  std::map<int, ProbeModel> models;
  std::map<int, std::map<std::string, std::vector<double>>> scores;
};

LayerScores score_sampled_layers(const ActivationStore& store, std::span<const ExampleMeta> meta,
                                 const Split& split, Target target, const ProbeConfig& probe_config,
                                 const ExtractionConfig& config);

struct LayerExtractionStats {
  int layer = 0;
  double tau_single = 0.0;
  double tau_window = 0.0;
  std::size_t n_windows = 0;
  std::size_t n_singles = 0;
};

struct ExtractionResult {
  Thresholds thresholds;
  std::vector<std::string> calibration_ids;
  std::vector<LayerExtractionStats> per_layer;  // provenance: tau applied at each layer
  std::vector<WindowRecord> windows;            // ordered by (layer, example_id, start)
  std::vector<TokenSelection> singles;          // ordered by (layer, example_id, token_index)
};

/// Calibrates at the reference layer over calibration_ids, then extracts at
/// every sampled layer with the same thresholds.
ExtractionResult run_extraction(const LayerScores& scores, std::span<const std::string> calibration_ids,
                                const ExtractionConfig& config);

void to_json(nlohmann::json& j, const ExtractionConfig& c);
void from_json(const nlohmann::json& j, ExtractionConfig& c);
void to_json(nlohmann::json& j, const WindowRecord& w);
void from_json(const nlohmann::json& j, WindowRecord& w);
void to_json(nlohmann::json& j, const TokenSelection& s);
void from_json(const nlohmann::json& j, TokenSelection& s);

}  // namespace probekit
