#pragma once

// Linear probes over hidden states: z-score standardisation, L2-regularised
// logistic regression (binary and softmax), stratified k-fold CV, the
// per-layer sweep, held-out evaluation and signed token scoring.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "probekit/corpus_store.hpp"
#include "probekit/optimizer.hpp"

namespace probekit {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Target { kNationality, kMedium, kRole, kCohort6 };

std::string_view to_string(Target t);
Target parse_target(std::string_view s);

struct ProbeConfig {
  double inverse_reg_C = 1.0;
  int max_iter = 4000;
  double grad_tol = 1e-6;  // max |grad| of the per-example mean objective
  int k_folds = 5;
  std::uint64_t seed = 0;

  /// Throws ConfigError on C <= 0, k_folds < 2, max_iter < 1, grad_tol <= 0.
  void validate() const;
};

struct Standardizer {
  Eigen::VectorXd means;
  Eigen::VectorXd scales;  // population std; 1 for zero-variance columns

  static Standardizer identity(Eigen::Index dim);
  Eigen::Index dim() const { return means.size(); }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& Z) const;
};

/// Throws std::invalid_argument on an empty or non-finite matrix.
Standardizer fit_standardizer(const Eigen::MatrixXd& X);

struct CVResult {
  std::vector<double> per_fold_acc;
  double mean_acc = 0.0;
  double std_acc = 0.0;  // population std over folds

  static CVResult from_folds(std::vector<double> per_fold);
};

struct ProbeModel {
  Standardizer standardizer;
  /// One row for binary probes (positive class = class_order[1]); k rows otherwise.
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  int layer = -1;
  Target target = Target::kNationality;
  std::vector<std::string> class_order;
  std::vector<std::string> training_ids;
  ProbeConfig config;
  OptimizationReport optimizer;
  /// Cross-validation record of the layer this model was selected at, if any.
  std::optional<CVResult> cv;

  bool is_binary() const { return class_order.size() == 2; }
};

/// Mean regularised objective over already-standardised rows:
///   binary:  (1/n) [ 1/2 |w|^2 + C sum ln(1 + exp(-y_i (w.x_i + b))) ]
///   k-way:   (1/n) [ 1/2 |W|_F^2 + C sum (logsumexp(z_i) - z_i[y_i]) ]
/// Biases are unpenalised. Parameters are packed as [w, b] or [W row-major, b].
double probe_objective(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes, double C,
                       const Eigen::VectorXd& params, Eigen::VectorXd* grad);
double probe_objective(const SparseRowMatrix& X, std::span<const int> y, int n_classes, double C,
                       const Eigen::VectorXd& params, Eigen::VectorXd* grad);
Eigen::VectorXd pack_parameters(const ProbeModel& model);

/// Fits a standardizer on X, then minimises the objective with L-BFGS.
/// Throws std::invalid_argument on fewer than two classes present in y or
/// mismatched dimensions.
ProbeModel train_probe(const Eigen::MatrixXd& X, std::span<const int> y,
                       std::vector<std::string> class_order, const ProbeConfig& config);
/// Sparse rows (e.g. TF-IDF) are used as-is with an identity standardizer.
ProbeModel train_probe(const SparseRowMatrix& X, std::span<const int> y,
                       std::vector<std::string> class_order, const ProbeConfig& config);

/// w . standardize(x) + b. Throws std::logic_error on a k-way model (k > 2).
double decision_score(const ProbeModel& model, const Eigen::VectorXd& x);
/// Binary: class 1 iff score >= 0. k-way: argmax, ties to the lower index.
int predict(const ProbeModel& model, const Eigen::VectorXd& x);
double accuracy(const ProbeModel& model, const Eigen::MatrixXd& X, std::span<const int> y);
double accuracy(const ProbeModel& model, const SparseRowMatrix& X, std::span<const int> y);


/// Fold index per row. Within each class the row indices are shuffled with
/// a stream derived from (seed, class) and dealt round-robin, continuing the
/// deal across classes so fold sizes differ by at most one.
std::vector<int> stratified_folds(std::span<const int> y, int n_classes, int k, std::uint64_t seed);

/// Each fold's standardizer and model are fitted on that fold's training rows
/// only. Throws std::invalid_argument if any class has fewer than k rows.
CVResult cross_validate(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                        const ProbeConfig& config);

// --- corpus-level operations ---------------------------------------------------

struct LabeledIds {
  std::vector<std::string> ids;
  std::vector<int> y;
  std::vector<std::string> class_order;
};

/// Class order per target: nationality {A, B}; medium {EMI, CMI} (examples
/// with medium NONE carry no medium label and are dropped); role {POSTDOC,
/// STUDENT}; cohort6: the sorted distinct cohorts of meta.
std::vector<std::string> class_order_for(Target target, std::span<const ExampleMeta> meta);
std::optional<std::string> label_of(const ExampleMeta& m, Target target);
LabeledIds labels_for(std::span<const ExampleMeta> meta, Target target,
                      std::span<const std::string> ids);

struct LayerSweepResult {
  Target target = Target::kNationality;
  std::vector<CVResult> per_layer;
  int best_layer = 0;  // argmax mean_acc, ties to the lowest index
  double chance_level = 0.5;
  double separability_threshold = 0.5;  // chance + 3 binomial sd
  bool no_layer_separable = false;
  std::vector<std::string> class_order;
  std::size_t n_train = 0;
};

LayerSweepResult layer_sweep(const ActivationStore& store, std::span<const ExampleMeta> meta,
                             Target target, const Split& split, const ProbeConfig& config);

/// Trains on the labelled centroids of ids at layer.
ProbeModel train_centroid_probe(const ActivationStore& store, std::span<const ExampleMeta> meta,
                                Target target, std::span<const std::string> ids, int layer,
                                const ProbeConfig& config);

struct HoldoutResult {
  double accuracy = 0.0;
  std::size_t n_test = 0;
};

/// Accuracy on the split's test ids. Throws LeakageError if any test id is
/// among the model's training ids.
HoldoutResult holdout_eval(const ProbeModel& model, const ActivationStore& store,
                           std::span<const ExampleMeta> meta, const Split& split);

struct TokenScore {
  std::string example_id;
  int layer = 0;
  int token_index = 0;
  double score = 0.0;
};

/// Binary probe on individual token rows of ids at layer.
ProbeModel train_token_probe(const ActivationStore& store, std::span<const ExampleMeta> meta,
                             Target target, std::span<const std::string> ids, int layer,
                             const ProbeConfig& config);

/// One signed score per generated token, ordered by (example_id, token_index).
/// Throws std::invalid_argument when layer differs from model.layer.
std::vector<TokenScore> token_scores(const ProbeModel& model, const ActivationStore& store,
                                     std::span<const std::string> example_ids, int layer);
/// Scores of one example's tokens at the model's layer.
std::vector<double> example_token_scores(const ProbeModel& model, const ActivationStore& store,
                                         const std::string& example_id);

// --- serialisation ---------------------------------------------------------------

void to_json(nlohmann::json& j, const ProbeConfig& c);
void from_json(const nlohmann::json& j, ProbeConfig& c);
void to_json(nlohmann::json& j, const CVResult& r);
void from_json(const nlohmann::json& j, CVResult& r);
void to_json(nlohmann::json& j, const ProbeModel& m);
void from_json(const nlohmann::json& j, ProbeModel& m);
void to_json(nlohmann::json& j, const LayerSweepResult& r);
void from_json(const nlohmann::json& j, LayerSweepResult& r);

}  // namespace probekit
