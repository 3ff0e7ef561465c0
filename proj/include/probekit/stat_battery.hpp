#pragma once

// Statistical tests and the analyses built on them: independence tests with
// effect sizes, rank tests, Bonferroni families, odds and log-odds, the
// directional hypotheses, confound subsets, sentence baseline tests and the
// per-layer trajectory.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "probekit/annotation.hpp"
#include "probekit/signal_extraction.hpp"

namespace probekit {

struct ContingencyTable {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<std::int64_t>> counts;  // rows x cols

  std::int64_t n() const;
  std::size_t rows() const { return counts.size(); }
  std::size_t cols() const { return counts.empty() ? 0 : counts[0].size(); }
  /// Expected count of the smallest cell under independence.
  double min_expected() const;
};

/// Builds a table from paired labels; row and column labels sorted.
ContingencyTable make_table(const std::vector<std::pair<std::string, std::string>>& pairs);

struct StatResult {
  std::string test_name;
  double statistic = 0.0;
  std::optional<int> df;
  double p_value = 1.0;
  std::string effect_name;  // "cramers_v", "rank_biserial" or "odds_ratio"
  double effect_size = 0.0;
  std::int64_t n = 0;
  std::optional<double> p_adjusted;
  std::optional<std::size_t> family_size;
  std::optional<bool> direction_confirmed;
  std::vector<std::string> warnings;
};

/// Pearson chi-square with df = (r-1)(c-1). Yates correction applies to 2x2
/// tables only. Throws std::invalid_argument on a table smaller than 2x2 or
/// a zero margin. Adds a warning when any expected count is below 5.
StatResult chi_square(const ContingencyTable& table, bool yates = false);

/// sqrt(chi2 / (n (min(r, c) - 1))), clamped to [0, 1].
double cramers_v(double chi2, double n, std::size_t r, std::size_t c);

/// Two-sided p: total probability of tables with the observed margins whose
/// probability does not exceed the observed one (1e-12 relative slack).
/// Throws std::invalid_argument on an all-zero table.
double fisher_exact(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

/// Chi-square, or Fisher's exact p for a 2x2 table with an expected count
/// below 5. The chi-square statistic and V are reported either way.
StatResult independence_test(const ContingencyTable& table, bool yates = false);

struct MannWhitneyResult {
  double u = 0.0;  // U of the first sample
  double p_value = 1.0;
  bool exact = false;
  double rank_biserial = 0.0;
};

/// Midrank U. Exact enumeration of rank assignments when n1 + n2 <= 12,
/// otherwise the normal approximation with tie and continuity corrections.
/// Throws std::invalid_argument on an empty sample.
MannWhitneyResult mann_whitney(std::span<const double> xs, std::span<const double> ys);
inline constexpr std::size_t kExactMannWhitneyLimit = 12;

inline double rank_biserial(double u, double n1, double n2) { return 1.0 - 2.0 * u / (n1 * n2); }

std::vector<double> bonferroni(std::span<const double> p_values);

/// ((a+s)(d+s)) / ((b+s)(c+s)) for the table [[a, b], [c, d]]. Throws
/// std::invalid_argument on a zero cell with s = 0 (use s = 0.5).
double odds_ratio(double a, double b, double c, double d, double smoothing = 0.0);

struct LogOddsEntry {
  std::string lemma;
  double log_odds = 0.0;  // > 0: distinctive for the first corpus
  std::int64_t count_a = 0;
  std::int64_t count_b = 0;
};

/// Per lemma: log of the smoothed odds of that lemma vs all others in A over
/// the same in B. Sorted by descending log_odds, ties by lemma.
std::vector<LogOddsEntry> log_odds_tokens(const std::map<std::string, std::int64_t>& counts_a,
                                          const std::map<std::string, std::int64_t>& counts_b,
                                          double smoothing = 0.5);

// --- annotated observations -----------------------------------------------------------

/// One probe-selected position joined with its token annotation and the
/// example's persona labels.
struct Observation {
  std::string example_id;
  int layer = 0;
  int token_index = 0;
  double score = 0.0;
  Nationality nationality = Nationality::kA;
  Medium medium = Medium::kNone;
  Role role = Role::kStudent;
  std::string upos;
  std::string lemma;
  StructuralLabels labels;
  StanceFlags stance;
  Domain domain = Domain::kGeneral;
  Quality quality = Quality::kOk;
};

enum class WindowStanceMode { kFocusToken, kAnyToken };

std::string_view to_string(WindowStanceMode m);
WindowStanceMode parse_window_stance_mode(std::string_view s);

struct JoinedDataset {
  std::string name;
  std::size_t n_input = 0;
  std::size_t n_unaligned = 0;  // no token record at the selected index
  std::vector<Observation> rows;  // every aligned record, any quality

  std::vector<Observation> ok_rows() const;
};

/// Windows are joined at their focus token. In kAnyToken mode the stance
/// flags are OR-ed over every token of the window.
JoinedDataset join_windows(std::span<const WindowRecord> windows, std::span<const AnnotatedToken> annotated,
                           std::span<const ExampleMeta> meta, WindowStanceMode mode);
JoinedDataset join_singles(std::span<const TokenSelection> singles,
                           std::span<const AnnotatedToken> annotated, std::span<const ExampleMeta> meta);

enum class Variable { kPhraseType, kModifierStructure, kClauseSlot, kPredicateType, kUpos };
inline constexpr Variable kAllVariables[] = {Variable::kPhraseType, Variable::kModifierStructure,
                                             Variable::kClauseSlot, Variable::kPredicateType,
                                             Variable::kUpos};
std::string_view to_string(Variable v);
std::string value_of(const Observation& o, Variable v);

/// Nationality x variable over rows.
StatResult nationality_test(std::span<const Observation> rows, Variable v, bool yates = false);

// --- hypotheses ------------------------------------------------------------------------------

struct HypothesisResult {
  std::string id;
  std::string description;
  std::string family;  // "structural" or "stance"
  bool primary = true;  // one of the five directional hypotheses
  Nationality predicted_higher = Nationality::kA;
  double rate_a = 0.0;
  double rate_b = 0.0;
  std::int64_t n_a = 0;
  std::int64_t n_b = 0;
  /// odds(A) / odds(B), smoothed by 0.5 only when a cell is zero.
  double odds_ratio = 0.0;
  double odds_smoothing = 0.0;
  StatResult test;
};

/// Class x feature-present tables for pre-/post-modification, nominal
/// predicates and adverbial slots (structural family, m = 4) and hedge,
/// booster, modal and passive markers (stance family, m = 4). Bonferroni is
/// applied within each family; direction_confirmed requires the predicted
/// rate order and adjusted p < alpha. Throws std::invalid_argument when a
/// class has no rows.
std::vector<HypothesisResult> run_hypotheses(std::span<const Observation> rows, bool yates = false,
                                             double alpha = 0.05);

// --- confounds -------------------------------------------------------------------------------

struct ConfoundResult {
  std::string id;
  std::string description;
  std::size_t subset_n = 0;
  std::optional<StatResult> test;
  std::string error;  // set when the subset could not be tested
};

/// Nationality within EMI / CMI, medium within A / B (phrase type as the
/// response), and role against phrase type and modifier structure.
std::vector<ConfoundResult> confound_suite(std::span<const Observation> rows, bool yates = false);

// --- sentence baseline -----------------------------------------------------------------------

struct SentenceTests {
  std::size_t n_input = 0;
  std::size_t n_ok = 0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::map<std::string, std::optional<StatResult>> structural;  // phrase_type, upos, predicate_type
  std::vector<HypothesisResult> stance;                          // four markers, m = 4
  std::optional<StatResult> position_by_stance;                 // position x any marker
  std::vector<std::string> notices;
};

SentenceTests sentence_tests(std::span<const SentenceRecord> sentences, std::span<const ExampleMeta> meta,
                             bool yates = false);

// --- layer trajectory -------------------------------------------------------------------------

struct DomainContrast {
  Domain domain = Domain::kSociocultural;
  double rate_a = 0.0;
  double rate_b = 0.0;
  double odds_ratio = 0.0;
  double odds_smoothing = 0.0;
  StatResult test;
};

/// Nationality x (domain == target) over rows.
DomainContrast domain_contrast(std::span<const Observation> rows, Domain domain, bool yates = false);

struct LayerTrajectory {
  int layer = 0;
  bool skipped = false;
  std::string notice;
  std::size_t n_windows = 0;
  double mean_score_a = 0.0;
  double mean_score_b = 0.0;
  double score_gap = 0.0;  // |mean_score_a - mean_score_b|
  std::optional<MannWhitneyResult> score_test;
  std::map<std::string, std::optional<StatResult>> variables;
  std::optional<DomainContrast> domain;
};

/// Score gaps come from the extracted windows alone; variable and domain
/// statistics need annotated rows (pass nullptr to skip them). Layers with
/// fewer than two examples per class are marked skipped.
std::vector<LayerTrajectory> layer_trajectory(std::span<const WindowRecord> windows,
                                              std::span<const ExampleMeta> meta,
                                              const std::vector<Observation>* annotated_rows,
                                              Domain contrast, bool yates = false);

void to_json(nlohmann::json& j, const StatResult& r);
void to_json(nlohmann::json& j, const MannWhitneyResult& r);
void to_json(nlohmann::json& j, const HypothesisResult& r);
void to_json(nlohmann::json& j, const ConfoundResult& r);
void to_json(nlohmann::json& j, const SentenceTests& r);
void to_json(nlohmann::json& j, const DomainContrast& r);
void to_json(nlohmann::json& j, const LayerTrajectory& r);
void to_json(nlohmann::json& j, const LogOddsEntry& e);

}  // namespace probekit
