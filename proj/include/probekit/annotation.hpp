#pragma once

// Maps Universal Dependencies token records onto a four-way structural schema
// (phrase type, modifier structure, clause slot, predicate type), stance
// flags, semantic domains and quality labels, and builds the sentence-level
// baseline over sentence roots.

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "probekit/corpus_store.hpp"

namespace probekit {

enum class PhraseType { kNominal, kVerbal, kAdjectival, kAdverbial, kFunction, kOther };
enum class ModifierStructure { kPreModifier, kPostModifier, kHead, kNone };
enum class ClauseSlot { kSubject, kObject, kPredicate, kAdverbial, kModifier, kOther };
enum class PredicateType { kVerbal, kNominal, kAdjectival, kNonPredicate };
enum class Domain { kTechnical, kTheoretical, kSociocultural, kPedagogical, kResearchMethods, kGeneral };
enum class Quality { kOk, kArtefact, kLowConfidence, kNeedsAdjudication };
enum class SentencePosition { kOpening, kMiddle, kClosing };

std::string_view to_string(PhraseType v);
std::string_view to_string(ModifierStructure v);
std::string_view to_string(ClauseSlot v);
std::string_view to_string(PredicateType v);
std::string_view to_string(Domain v);
std::string_view to_string(Quality v);
std::string_view to_string(SentencePosition v);
PhraseType parse_phrase_type(std::string_view s);
ModifierStructure parse_modifier_structure(std::string_view s);
ClauseSlot parse_clause_slot(std::string_view s);
PredicateType parse_predicate_type(std::string_view s);
Domain parse_domain(std::string_view s);
Quality parse_quality(std::string_view s);
SentencePosition parse_sentence_position(std::string_view s);

/// Lexicon domains in priority order (GENERAL is the fallback, not a lexicon).
inline constexpr Domain kLexiconDomains[] = {Domain::kTechnical, Domain::kTheoretical,
                                             Domain::kSociocultural, Domain::kPedagogical,
                                             Domain::kResearchMethods};

/// Modal lemmas a modal lexicon may contain.
inline constexpr std::string_view kClosedModals[] = {"can",    "could", "may",   "might", "must",
                                                     "shall",  "should", "will", "would", "ought"};

struct LexiconSet {
  std::set<std::string> hedges;
  std::set<std::string> boosters;
  std::set<std::string> modals;
  std::vector<std::pair<Domain, std::set<std::string>>> domains;  // priority order

  static LexiconSet defaults();
  /// Reads hedges.txt, boosters.txt, modals.txt and domain_<name>.txt from
  /// dir (one lemma per line, '#' comments). Throws ConfigError when a modal
  /// falls outside the closed list, DataError when a file is missing.
  static LexiconSet load(const std::filesystem::path& dir);

  /// SHA-256 over a canonical serialisation of every list.
  std::string hash() const;
};

struct StructuralLabels {
  PhraseType phrase_type = PhraseType::kOther;
  ModifierStructure modifier_structure = ModifierStructure::kNone;
  ClauseSlot clause_slot = ClauseSlot::kOther;
  PredicateType predicate_type = PredicateType::kNonPredicate;

  bool operator==(const StructuralLabels&) const = default;
};

struct StanceFlags {
  bool hedge = false;
  bool booster = false;
  bool modal = false;
  bool passive = false;

  bool operator==(const StanceFlags&) const = default;
};

enum class QualityRule {
  kInvalidUtf8,
  kSubwordFragment,
  kPunctuationOnly,
  kEmptyLemma,
  kDanglingHead,
  kMultiRoot,
  kCoordinationCycle,
  kMisclassifiedRoot,
  kAdnominalPremodifier,
};

std::string_view to_string(QualityRule r);
QualityRule parse_quality_rule(std::string_view s);
Quality severity(QualityRule r);

/// Ordered rule list; the first rule that fires decides quality and reason.
struct QualityConfig {
  std::vector<QualityRule> rules{
      QualityRule::kInvalidUtf8,      QualityRule::kSubwordFragment,   QualityRule::kPunctuationOnly,
      QualityRule::kEmptyLemma,       QualityRule::kDanglingHead,      QualityRule::kMultiRoot,
      QualityRule::kCoordinationCycle, QualityRule::kMisclassifiedRoot, QualityRule::kAdnominalPremodifier,
  };
};

struct AnnotatedToken {
  TokenRecord token;
  StructuralLabels labels;
  StanceFlags stance;
  Domain domain = Domain::kGeneral;
  Quality quality = Quality::kOk;
  std::string reason;  // empty when quality is OK
};

/// Tokens of one sentence with lookups by example-wide token index.
class SentenceView {
 public:
  explicit SentenceView(std::span<const TokenRecord> tokens);

  std::span<const TokenRecord> tokens() const { return tokens_; }
  /// Position of token_index within tokens(), or -1.
  int position_of(int token_index) const;
  const TokenRecord* find(int token_index) const;
  std::vector<const TokenRecord*> children(int token_index) const;
  std::size_t root_count() const;

  /// Deprel and head after walking conj links back to the first conjunct.
  struct Resolved {
    std::string deprel;
    int head = -1;
    bool dangling = false;
    bool cyclic = false;
  };
  Resolved resolve(const TokenRecord& t) const;

 private:
  std::span<const TokenRecord> tokens_;
  std::vector<std::pair<int, int>> index_;  // (token_index, position), sorted
};

/// Text before the first ':' of a deprel ("nsubj:pass" -> "nsubj").
std::string_view deprel_base(std::string_view deprel);
bool is_modifier_relation(std::string_view deprel, std::string_view head_upos);

StructuralLabels classify_structure(const TokenRecord& token, const SentenceView& sentence);
StanceFlags stance_flags(const TokenRecord& token, const SentenceView& sentence,
                         const LexiconSet& lexicons);
Domain assign_domain(std::string_view lemma, const LexiconSet& lexicons);

struct QualityVerdict {
  Quality quality = Quality::kOk;
  std::string reason;
};

QualityVerdict quality_filter(const TokenRecord& token, const SentenceView& sentence,
                              const QualityConfig& config = {});

/// Annotates one sentence; tokens keep their input order.
std::vector<AnnotatedToken> annotate_sentence(std::span<const TokenRecord> sentence,
                                              const LexiconSet& lexicons,
                                              const QualityConfig& config = {});

/// Groups by (example_id, sent_index) and annotates every sentence. Output is
/// ordered by (example_id, token_index) whatever the input order.
std::vector<AnnotatedToken> annotate_tokens(std::span<const TokenRecord> tokens,
                                            const LexiconSet& lexicons,
                                            const QualityConfig& config = {});

struct SentenceRecord {
  std::string example_id;
  int sent_index = 0;
  int root_token_index = -1;  // -1 when the sentence has no single root
  std::string root_upos;
  StructuralLabels root_labels;
  SentencePosition position = SentencePosition::kOpening;
  StanceFlags stance;  // marker present anywhere in the sentence
  Quality quality = Quality::kOk;
  std::string reason;
};

/// One record per (example_id, sent_index). Sentences without exactly one
/// root are kept with a non-OK quality and a reason.
std::vector<SentenceRecord> sentence_baseline(std::span<const AnnotatedToken> annotated);

void to_json(nlohmann::json& j, const AnnotatedToken& a);
void from_json(const nlohmann::json& j, AnnotatedToken& a);
void to_json(nlohmann::json& j, const SentenceRecord& s);
void from_json(const nlohmann::json& j, SentenceRecord& s);

}  // namespace probekit
