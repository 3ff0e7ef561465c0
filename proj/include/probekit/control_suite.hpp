#pragma once

// Controls for the hidden-state probes: shuffled-label baselines, selectivity,
// a TF-IDF surface-text skyline, and cross-family transfer.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "probekit/probe_engine.hpp"

namespace probekit {

// --- shuffled-label baseline ------------------------------------------------------

/// Returns the permuted label vector for permutation index perm. Used as a
/// test hook; the default draws a Fisher-Yates shuffle from (seed, perm).
using PermutationFn = std::function<std::vector<int>(std::span<const int> y, std::size_t perm)>;

struct ShuffleBaseline {
  std::size_t n_permutations = 0;
  std::vector<double> per_perm_acc;
  double mean_shuffled_acc = 0.0;
  std::uint64_t seed = 0;
};

/// Each permutation shuffles y, then runs the same cross_validate protocol as
/// the real probe. Throws ConfigError when n_perms < 1.
ShuffleBaseline shuffled_baseline(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                                  const ProbeConfig& config, std::size_t n_perms, std::uint64_t seed,
                                  const PermutationFn& permute = {});

/// The permutation used for index perm under the default shuffle.
std::vector<int> permuted_labels(std::span<const int> y, std::uint64_t seed, std::size_t perm);

inline double selectivity(double real_cv_acc, double mean_shuffled_acc) {
  return real_cv_acc - mean_shuffled_acc;
}

// --- TF-IDF ---------------------------------------------------------------------

struct TfidfConfig {
  int ngram_min = 1;
  int ngram_max = 2;
  std::size_t min_token_length = 2;
};

/// Lowercases, splits on runs of non-alphanumeric ASCII bytes (bytes >= 0x80
/// count as alphanumeric so UTF-8 words stay whole) and drops short tokens.
std::vector<std::string> tfidf_tokenize(std::string_view text, std::size_t min_token_length);

class TfidfVectorizer {
 public:
  /// Throws std::invalid_argument on no texts or an empty vocabulary.
  static TfidfVectorizer fit(std::span<const std::string> texts, const TfidfConfig& config);

  /// Raw counts times idf, rows L2-normalised; out-of-vocabulary terms are ignored.
  SparseRowMatrix transform(std::span<const std::string> texts) const;

  const std::map<std::string, int>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& idf() const { return idf_; }
  const TfidfConfig& config() const { return config_; }

 private:
  std::vector<std::string> terms(std::string_view text) const;

  TfidfConfig config_;
  std::map<std::string, int> vocabulary_;  // term -> column, columns in term order
  std::vector<double> idf_;
};

struct SkylineResult {
  CVResult cv;
  double holdout_acc = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  /// Fold per training row, from stratified_folds with the probe's seed.
  std::vector<int> folds;
};

/// TF-IDF skyline with the probe's classifier and CV protocol. The vectorizer
/// is refitted on each fold's training texts, then on all training texts for
/// the single held-out evaluation.
SkylineResult skyline(std::span<const std::string> train_texts, std::span<const int> y_train,
                      std::span<const std::string> test_texts, std::span<const int> y_test,
                      int n_classes, const ProbeConfig& config, const TfidfConfig& tfidf = {});

/// Corpus-level wrapper over the split's train and test texts for target.
SkylineResult skyline(std::span<const ExampleMeta> meta, Target target, const Split& split,
                      const ProbeConfig& config, const TfidfConfig& tfidf = {});

// --- cross-family transfer -------------------------------------------------------------

struct TransferPair {
  TemplateFamily train_family = TemplateFamily::kBase;
  TemplateFamily test_family = TemplateFamily::kAlt;
  double accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct TransferResult {
  int layer = 0;
  Target target = Target::kNationality;
  std::vector<TransferPair> pairs;  // six ordered pairs
};

/// Trains a centroid probe on every example of one family and scores every
/// example of each other family. Each family must hold an equal number of
/// examples per class, at least two each; otherwise std::invalid_argument.
TransferResult cross_family_transfer(const ActivationStore& store, std::span<const ExampleMeta> meta,
                                     int layer, const ProbeConfig& config,
                                     Target target = Target::kNationality);

void to_json(nlohmann::json& j, const ShuffleBaseline& s);
void to_json(nlohmann::json& j, const SkylineResult& s);
void to_json(nlohmann::json& j, const TransferResult& t);

}  // namespace probekit
