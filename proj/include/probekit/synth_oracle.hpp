#pragma once

// Synthetic corpora with a known planted class signal: Gaussian activations
// plus a +/- offset along a per-layer direction on a chosen fraction of token
// rows. Serves as ground truth for probe, control and extraction checks.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "probekit/corpus_store.hpp"
#include "probekit/signal_extraction.hpp"

namespace probekit {

struct SynthConfig {
  std::size_t n_examples = 270;
  std::size_t n_layers = 36;
  std::size_t hidden_dim = 64;
  std::size_t min_tokens = 150;
  std::size_t max_tokens = 250;
  double class_balance = 0.5;  // fraction of class A within each family
  std::uint64_t signal_direction_seed = 17;
  /// Gap between class means along the layer's direction; one entry per layer.
  std::vector<double> strength_profile;
  double token_sparsity = 1.0;  // fraction of token rows carrying the plant
  double noise_sd = 1.0;
  std::array<double, 3> family_weights{1.0, 1.0, 1.0};  // BASE, ALT, THEORY
  /// Multiplies the strength for every example of a family (default 1).
  std::map<TemplateFamily, double> family_specific_strength;
  std::uint64_t seed = 0;
  /// Also emit tokens.jsonl records tiled from a built-in sentence bank.
  bool with_tokens = false;

  /// Throws ConfigError on an impossible configuration, including
  /// token_sparsity * min_tokens < 1.
  void validate() const;

  /// Zero strength everywhere except `strength` at `layer`.
  static SynthConfig planted_at(std::size_t layer, double strength, std::size_t n_layers = 36);
};

struct PlantRecord {
  struct Example {
    Nationality nationality = Nationality::kA;
    TemplateFamily family = TemplateFamily::kBase;
    std::vector<int> planted_indices;  // sorted; identical at every layer
  };
  std::map<std::string, Example> examples;
  std::vector<Eigen::VectorXd> directions;  // unit norm, one per layer
  std::vector<double> strengths;
};

struct SynthCorpus {
  Corpus corpus;
  PlantRecord plant;
  std::vector<TokenRecord> tokens;  // empty unless with_tokens
};

/// Deterministic in config. Family blocks are contiguous; within a family the
/// j-th example is A when floor((j+1) b) > floor(j b); cohorts cycle over
/// EMI postdoc, CMI postdoc and student (medium NONE) every two examples.
SynthCorpus generate(const SynthConfig& config);

/// Unit directions reproducible from the seed alone.
std::vector<Eigen::VectorXd> plant_directions(std::uint64_t signal_direction_seed, std::size_t n_layers,
                                              std::size_t hidden_dim);

struct SelectionScore {
  std::size_t n_selected = 0;
  std::size_t n_planted = 0;
  std::size_t hits = 0;
  std::optional<double> precision;  // null for an empty selection
  double recall = 0.0;
  /// Hit rate of a seeded random selection with the same count per example.
  double baseline_hit_rate = 0.0;
  std::optional<double> lift;  // precision / baseline_hit_rate
};

/// Scores (example_id, token_index) selections at layer against the planted
/// positions of every example in the plant. Throws std::out_of_range when the
/// layer is outside the plant.
SelectionScore score_selection(std::span<const TokenSelection> selections, const PlantRecord& plant,
                               int layer, std::uint64_t baseline_seed = 0);

/// Writes the corpus (meta.jsonl and .actd files), tokens.jsonl when tokens
/// were generated, plant.json and synth_config.json into dir. A stale
/// tokens.jsonl is removed when no tokens were generated.
void save_synth(const SynthCorpus& synth, const SynthConfig& config, const std::filesystem::path& dir);

/// Missing keys keep their defaults. Without "strength_profile", a
/// "planted_layer" plus "strength" pair plants one layer; otherwise every
/// strength is zero. Unknown keys raise ConfigError.
void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);
void to_json(nlohmann::json& j, const PlantRecord& p);
void from_json(const nlohmann::json& j, PlantRecord& p);
void to_json(nlohmann::json& j, const SelectionScore& s);

}  // namespace probekit
