#include "probekit/annotation.hpp"

#include <algorithm>
#include <array>
#include <map>

namespace probekit {

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view s, const std::array<E, N>& values, std::string_view what) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw DataError(DataError::Kind::kFormat, std::string(s),
                  "unknown " + std::string(what) + " value: " + std::string(s));
}

bool is_nominal_upos(std::string_view upos) {
  return upos == "NOUN" || upos == "PROPN" || upos == "PRON";
}

bool has_alnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c >= 0x80; });
}

bool is_subject(std::string_view deprel) {
  const auto base = deprel_base(deprel);
  return base == "nsubj" || base == "csubj";
}

std::set<std::string> to_set(std::initializer_list<const char*> words) {
  return {words.begin(), words.end()};
}

std::set<std::string> read_lexicon(const std::filesystem::path& path) {
  std::set<std::string> out;
  for (const auto& line : split(read_file(path), '\n')) {
    const std::string entry = to_lower_ascii(trim(line));
    if (entry.empty() || entry[0] == '#') continue;
    out.insert(entry);
  }
  return out;
}

}  // namespace

std::string_view to_string(PhraseType v) {
  switch (v) {
    case PhraseType::kNominal: return "NOMINAL";
    case PhraseType::kVerbal: return "VERBAL";
    case PhraseType::kAdjectival: return "ADJECTIVAL";
    case PhraseType::kAdverbial: return "ADVERBIAL";
    case PhraseType::kFunction: return "FUNCTION";
    case PhraseType::kOther: return "OTHER";
  }
  return "OTHER";
}

std::string_view to_string(ModifierStructure v) {
  switch (v) {
    case ModifierStructure::kPreModifier: return "PRE_MODIFIER";
    case ModifierStructure::kPostModifier: return "POST_MODIFIER";
    case ModifierStructure::kHead: return "HEAD";
    case ModifierStructure::kNone: return "NONE";
  }
  return "NONE";
}

std::string_view to_string(ClauseSlot v) {
  switch (v) {
    case ClauseSlot::kSubject: return "SUBJECT";
    case ClauseSlot::kObject: return "OBJECT";
    case ClauseSlot::kPredicate: return "PREDICATE";
    case ClauseSlot::kAdverbial: return "ADVERBIAL";
    case ClauseSlot::kModifier: return "MODIFIER";
    case ClauseSlot::kOther: return "OTHER";
  }
  return "OTHER";
}

std::string_view to_string(PredicateType v) {
  switch (v) {
    case PredicateType::kVerbal: return "VERBAL";
    case PredicateType::kNominal: return "NOMINAL";
    case PredicateType::kAdjectival: return "ADJECTIVAL";
    case PredicateType::kNonPredicate: return "NON_PREDICATE";
  }
  return "NON_PREDICATE";
}

std::string_view to_string(Domain v) {
  switch (v) {
    case Domain::kTechnical: return "TECHNICAL";
    case Domain::kTheoretical: return "THEORETICAL";
    case Domain::kSociocultural: return "SOCIOCULTURAL";
    case Domain::kPedagogical: return "PEDAGOGICAL";
    case Domain::kResearchMethods: return "RESEARCH_METHODS";
    case Domain::kGeneral: return "GENERAL";
  }
  return "GENERAL";
}

std::string_view to_string(Quality v) {
  switch (v) {
    case Quality::kOk: return "OK";
    case Quality::kArtefact: return "ARTEFACT";
    case Quality::kLowConfidence: return "LOW_CONFIDENCE";
    case Quality::kNeedsAdjudication: return "NEEDS_ADJUDICATION";
  }
  return "OK";
}

std::string_view to_string(SentencePosition v) {
  switch (v) {
    case SentencePosition::kOpening: return "OPENING";
    case SentencePosition::kMiddle: return "MIDDLE";
    case SentencePosition::kClosing: return "CLOSING";
  }
  return "OPENING";
}

std::string_view to_string(QualityRule r) {
  switch (r) {
    case QualityRule::kInvalidUtf8: return "invalid_utf8";
    case QualityRule::kSubwordFragment: return "subword_fragment";
    case QualityRule::kPunctuationOnly: return "punctuation_only";
    case QualityRule::kEmptyLemma: return "empty_lemma";
    case QualityRule::kDanglingHead: return "dangling_head";
    case QualityRule::kMultiRoot: return "multi_root";
    case QualityRule::kCoordinationCycle: return "coordination_cycle";
    case QualityRule::kMisclassifiedRoot: return "misclassified_root";
    case QualityRule::kAdnominalPremodifier: return "adnominal_premodifier";
  }
  return "invalid_utf8";
}

PhraseType parse_phrase_type(std::string_view s) {
  return parse_enum(s, std::array{PhraseType::kNominal, PhraseType::kVerbal, PhraseType::kAdjectival,
                                  PhraseType::kAdverbial, PhraseType::kFunction, PhraseType::kOther},
                    "phrase_type");
}

ModifierStructure parse_modifier_structure(std::string_view s) {
  return parse_enum(s, std::array{ModifierStructure::kPreModifier, ModifierStructure::kPostModifier,
                                  ModifierStructure::kHead, ModifierStructure::kNone},
                    "modifier_structure");
}

ClauseSlot parse_clause_slot(std::string_view s) {
  return parse_enum(s, std::array{ClauseSlot::kSubject, ClauseSlot::kObject, ClauseSlot::kPredicate,
                                  ClauseSlot::kAdverbial, ClauseSlot::kModifier, ClauseSlot::kOther},
                    "clause_slot");
}

PredicateType parse_predicate_type(std::string_view s) {
  return parse_enum(s, std::array{PredicateType::kVerbal, PredicateType::kNominal,
                                  PredicateType::kAdjectival, PredicateType::kNonPredicate},
                    "predicate_type");
}

Domain parse_domain(std::string_view s) {
  return parse_enum(s, std::array{Domain::kTechnical, Domain::kTheoretical, Domain::kSociocultural,
                                  Domain::kPedagogical, Domain::kResearchMethods, Domain::kGeneral},
                    "domain");
}

Quality parse_quality(std::string_view s) {
  return parse_enum(s, std::array{Quality::kOk, Quality::kArtefact, Quality::kLowConfidence,
                                  Quality::kNeedsAdjudication},
                    "quality");
}

SentencePosition parse_sentence_position(std::string_view s) {
  return parse_enum(s, std::array{SentencePosition::kOpening, SentencePosition::kMiddle,
                                  SentencePosition::kClosing},
                    "position");
}

QualityRule parse_quality_rule(std::string_view s) {
  for (QualityRule r : QualityConfig{}.rules) {
    if (to_string(r) == s) return r;
  }
  throw ConfigError("unknown quality rule: " + std::string(s));
}

Quality severity(QualityRule r) {
  switch (r) {
    case QualityRule::kInvalidUtf8:
    case QualityRule::kSubwordFragment:
    case QualityRule::kPunctuationOnly:
    case QualityRule::kDanglingHead: return Quality::kArtefact;
    case QualityRule::kEmptyLemma:
    case QualityRule::kMultiRoot:
    case QualityRule::kAdnominalPremodifier: return Quality::kLowConfidence;
    case QualityRule::kCoordinationCycle:
    case QualityRule::kMisclassifiedRoot: return Quality::kNeedsAdjudication;
  }
  return Quality::kArtefact;
}

// --- lexicons --------------------------------------------------------------------

LexiconSet LexiconSet::defaults() {
  LexiconSet l;
  l.hedges = to_set({"may", "might", "could", "perhaps", "possibly", "suggest", "appear", "seem",
                     "indicate", "likely", "relatively", "somewhat", "tend", "assume"});
  l.boosters = to_set({"clearly", "certainly", "demonstrate", "show", "establish", "indeed",
                       "undoubtedly", "always", "must", "crucial", "essential"});
  l.modals = to_set({"can", "could", "may", "might", "must", "shall", "should", "will", "would"});
  l.domains = {
      {Domain::kTechnical,
       to_set({"algorithm", "automation", "circuit", "code", "computer", "data", "database", "device",
               "engineering", "hardware", "interface", "machine", "model", "network", "optimization",
               "parameter", "processor", "protocol", "sensor", "signal", "simulation", "software",
               "system", "voltage"})},
      {Domain::kTheoretical,
       to_set({"abstraction", "concept", "conceptual", "construct", "discourse", "epistemology",
               "framework", "hypothesis", "model", "notion", "ontology", "paradigm", "perspective",
               "principle", "proposition", "theoretical", "theory"})},
      {Domain::kSociocultural,
       to_set({"community", "cultural", "culture", "diversity", "economy", "ethnicity", "globalization",
               "heritage", "identity", "international", "language", "nation", "national", "policy",
               "politics", "social", "society", "tradition", "values"})},
      {Domain::kPedagogical,
       to_set({"assessment", "classroom", "course", "curriculum", "education", "educational",
               "instruction", "learn", "learning", "lecture", "lesson", "pedagogy", "seminar",
               "student", "supervision", "teach", "teaching", "tutor"})},
      {Domain::kResearchMethods,
       to_set({"analyse", "analysis", "analyze", "data", "dataset", "evaluate", "evaluation",
               "experiment", "interview", "measure", "measurement", "method", "methodology",
               "participant", "questionnaire", "reliability", "sample", "statistical", "survey",
               "validity", "variable"})},
  };
  return l;
}

LexiconSet LexiconSet::load(const std::filesystem::path& dir) {
  LexiconSet l;
  l.hedges = read_lexicon(dir / "hedges.txt");
  l.boosters = read_lexicon(dir / "boosters.txt");
  l.modals = read_lexicon(dir / "modals.txt");
  for (const auto& m : l.modals) {
    if (std::find(std::begin(kClosedModals), std::end(kClosedModals), m) == std::end(kClosedModals)) {
      throw ConfigError("modal lexicon entry '" + m + "' is not a modal auxiliary");
    }
  }
  for (Domain d : kLexiconDomains) {
    const std::string name = "domain_" + to_lower_ascii(to_string(d)) + ".txt";
    l.domains.emplace_back(d, read_lexicon(dir / name));
  }
  return l;
}

std::string LexiconSet::hash() const {
  std::string canon;
  auto add = [&](std::string_view name, const std::set<std::string>& words) {
    canon += name;
    canon += '\n';
    for (const auto& w : words) {
      canon += w;
      canon += '\n';
    }
  };
  add("hedges", hedges);
  add("boosters", boosters);
  add("modals", modals);
  for (const auto& [d, words] : domains) add(to_string(d), words);
  return sha256_hex(canon);
}

// --- sentence view ------------------------------------------------------------------

SentenceView::SentenceView(std::span<const TokenRecord> tokens) : tokens_(tokens) {
  for (std::size_t i = 0; i < tokens.size(); ++i) index_.emplace_back(tokens[i].token_index, static_cast<int>(i));
  std::sort(index_.begin(), index_.end());
}

int SentenceView::position_of(int token_index) const {
  const auto it = std::lower_bound(index_.begin(), index_.end(), std::pair{token_index, -1});
  if (it == index_.end() || it->first != token_index) return -1;
  return it->second;
}

const TokenRecord* SentenceView::find(int token_index) const {
  const int pos = position_of(token_index);
  return pos < 0 ? nullptr : &tokens_[static_cast<std::size_t>(pos)];
}

std::vector<const TokenRecord*> SentenceView::children(int token_index) const {
  std::vector<const TokenRecord*> out;
  for (const auto& t : tokens_) {
    if (t.head == token_index && t.token_index != token_index) out.push_back(&t);
  }
  return out;
}

std::size_t SentenceView::root_count() const {
  return static_cast<std::size_t>(
      std::count_if(tokens_.begin(), tokens_.end(), [](const TokenRecord& t) { return t.head == -1; }));
}

SentenceView::Resolved SentenceView::resolve(const TokenRecord& t) const {
  Resolved r{t.deprel, t.head, false, false};
  const TokenRecord* current = &t;
  std::size_t steps = 0;
  while (deprel_base(current->deprel) == "conj") {
    if (current->head == -1) break;
    const TokenRecord* head = find(current->head);
    if (!head) {
      r.dangling = true;
      return r;
    }
    if (++steps > tokens_.size() || head == &t) {
      r.cyclic = true;
      return r;
    }
    current = head;
  }
  r.deprel = current->deprel;
  r.head = current->head;
  if (r.head != -1 && !find(r.head)) r.dangling = true;
  return r;
}

// --- classification ------------------------------------------------------------------

std::string_view deprel_base(std::string_view deprel) {
  return deprel.substr(0, deprel.find(':'));
}

bool is_modifier_relation(std::string_view deprel, std::string_view head_upos) {
  const auto base = deprel_base(deprel);
  if (base == "amod" || base == "nummod" || base == "nmod" || base == "acl" || base == "appos") return true;
  if (deprel == "compound") return true;
  return base == "advmod" && is_nominal_upos(head_upos);
}

namespace {

bool is_modifier_of(const SentenceView& s, const SentenceView::Resolved& r) {
  if (r.dangling || r.cyclic || r.head == -1) return false;
  const TokenRecord* head = s.find(r.head);
  return head && is_modifier_relation(r.deprel, head->upos);
}

bool has_child_with(const SentenceView& s, int token_index, bool (*pred)(std::string_view)) {
  for (const auto* c : s.children(token_index)) {
    if (pred(c->deprel)) return true;
  }
  return false;
}

bool is_cop(std::string_view deprel) { return deprel_base(deprel) == "cop"; }
bool is_subject_rel(std::string_view deprel) { return is_subject(deprel); }
bool is_aux(std::string_view deprel) { return deprel_base(deprel) == "aux"; }
bool is_aux_pass(std::string_view deprel) { return deprel == "aux:pass"; }

}  // namespace

StructuralLabels classify_structure(const TokenRecord& token, const SentenceView& sentence) {
  StructuralLabels out;
  const auto r = sentence.resolve(token);
  if (r.dangling) return out;

  const std::string_view upos = token.upos;
  if (is_nominal_upos(upos)) {
    out.phrase_type = PhraseType::kNominal;
  } else if (upos == "VERB") {
    out.phrase_type = PhraseType::kVerbal;
  } else if (upos == "ADJ") {
    out.phrase_type = PhraseType::kAdjectival;
  } else if (upos == "ADV") {
    out.phrase_type = PhraseType::kAdverbial;
  } else if (upos == "ADP" || upos == "DET" || upos == "AUX" || upos == "PART" || upos == "CCONJ" ||
             upos == "SCONJ" || upos == "PUNCT" || upos == "SYM") {
    out.phrase_type = PhraseType::kFunction;
  }
  if (r.cyclic) return out;

  const bool modifier = is_modifier_of(sentence, r);
  if (modifier) {
    out.modifier_structure =
        token.token_index < r.head ? ModifierStructure::kPreModifier : ModifierStructure::kPostModifier;
  } else {
    for (const auto& other : sentence.tokens()) {
      if (&other == &token) continue;
      const auto ro = sentence.resolve(other);
      if (ro.head == token.token_index && is_modifier_of(sentence, ro)) {
        out.modifier_structure = ModifierStructure::kHead;
        break;
      }
    }
  }

  const bool is_root = r.head == -1;
  const bool has_cop = has_child_with(sentence, token.token_index, is_cop);
  const auto base = deprel_base(r.deprel);
  if (is_subject(r.deprel)) {
    out.clause_slot = ClauseSlot::kSubject;
  } else if (base == "obj" || base == "iobj" || base == "ccomp" || base == "xcomp") {
    out.clause_slot = ClauseSlot::kObject;
  } else if (is_root && (upos == "VERB" || has_cop ||
                         has_child_with(sentence, token.token_index, is_subject_rel))) {
    out.clause_slot = ClauseSlot::kPredicate;
  } else if (modifier) {
    out.clause_slot = ClauseSlot::kModifier;
  } else if (base == "advmod" || base == "advcl" || base == "obl") {
    out.clause_slot = ClauseSlot::kAdverbial;
  }

  if (is_root || has_cop) {
    if (upos == "VERB") {
      out.predicate_type = PredicateType::kVerbal;
    } else if (is_nominal_upos(upos)) {
      out.predicate_type = PredicateType::kNominal;
    } else if (upos == "ADJ") {
      out.predicate_type = PredicateType::kAdjectival;
    }
  }
  return out;
}

StanceFlags stance_flags(const TokenRecord& token, const SentenceView& sentence,
                         const LexiconSet& lexicons) {
  const std::string lemma = to_lower_ascii(token.lemma);
  StanceFlags f;
  f.hedge = lexicons.hedges.count(lemma) > 0;
  f.booster = lexicons.boosters.count(lemma) > 0;
  f.modal = lexicons.modals.count(lemma) > 0 && (token.upos == "AUX" || token.upos == "VERB");
  const auto voice = token.feats.find("Voice");
  f.passive = (voice != token.feats.end() && voice->second == "Pass") || token.deprel == "nsubj:pass" ||
              token.deprel == "aux:pass" || token.deprel == "csubj:pass" ||
              has_child_with(sentence, token.token_index, is_aux_pass);
  return f;
}

Domain assign_domain(std::string_view lemma, const LexiconSet& lexicons) {
  const std::string key = to_lower_ascii(lemma);
  for (const auto& [domain, words] : lexicons.domains) {
    if (words.count(key)) return domain;
  }
  return Domain::kGeneral;
}

QualityVerdict quality_filter(const TokenRecord& token, const SentenceView& sentence,
                              const QualityConfig& config) {
  const auto r = sentence.resolve(token);
  for (QualityRule rule : config.rules) {
    bool fires = false;
    switch (rule) {
      case QualityRule::kInvalidUtf8:
        fires = !is_valid_utf8(token.surface) || !is_valid_utf8(token.lemma);
        break;
      case QualityRule::kSubwordFragment:
        fires = token.surface.starts_with("##") || token.surface.starts_with("@@") ||
                (!has_alnum(token.surface) && token.upos != "PUNCT" && token.upos != "SYM");
        break;
      case QualityRule::kPunctuationOnly:
        fires = token.upos == "PUNCT" || (!token.surface.empty() && !has_alnum(token.surface));
        break;
      case QualityRule::kEmptyLemma: {
        const std::string lemma = trim(token.lemma);
        fires = lemma.empty() || lemma == "_";
        break;
      }
      case QualityRule::kDanglingHead:
        fires = r.dangling;
        break;
      case QualityRule::kMultiRoot:
        fires = sentence.root_count() != 1;
        break;
      case QualityRule::kCoordinationCycle:
        fires = r.cyclic;
        break;
      case QualityRule::kMisclassifiedRoot: {
        if (token.head != -1) break;
        if (token.upos != "NOUN" && token.upos != "PROPN" && token.upos != "ADJ") break;
        if (has_child_with(sentence, token.token_index, is_cop)) break;
        const auto form = token.feats.find("VerbForm");
        fires = has_child_with(sentence, token.token_index, is_aux) ||
                (form != token.feats.end() && (form->second == "Part" || form->second == "Ger"));
        break;
      }
      case QualityRule::kAdnominalPremodifier:
        fires = deprel_base(r.deprel) == "acl" && r.head != -1 && token.token_index < r.head;
        break;
    }
    if (fires) return {severity(rule), std::string(to_string(rule))};
  }
  return {};
}

std::vector<AnnotatedToken> annotate_sentence(std::span<const TokenRecord> sentence,
                                              const LexiconSet& lexicons, const QualityConfig& config) {
  const SentenceView view(sentence);
  std::vector<AnnotatedToken> out;
  out.reserve(sentence.size());
  for (const auto& t : sentence) {
    AnnotatedToken a;
    a.token = t;
    a.labels = classify_structure(t, view);
    a.stance = stance_flags(t, view, lexicons);
    a.domain = assign_domain(t.lemma, lexicons);
    auto verdict = quality_filter(t, view, config);
    a.quality = verdict.quality;
    a.reason = std::move(verdict.reason);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<AnnotatedToken> annotate_tokens(std::span<const TokenRecord> tokens,
                                            const LexiconSet& lexicons, const QualityConfig& config) {
  std::map<std::pair<std::string, int>, std::vector<TokenRecord>> sentences;
  for (const auto& t : tokens) sentences[{t.example_id, t.sent_index}].push_back(t);
  std::vector<std::vector<TokenRecord>*> groups;
  for (auto& [key, group] : sentences) {
    std::sort(group.begin(), group.end(),
              [](const auto& a, const auto& b) { return a.token_index < b.token_index; });
    groups.push_back(&group);
  }
  std::vector<std::vector<AnnotatedToken>> annotated(groups.size());
  parallel_for(groups.size(), [&](std::size_t i) { annotated[i] = annotate_sentence(*groups[i], lexicons, config); });

  std::vector<AnnotatedToken> out;
  for (auto& group : annotated) std::move(group.begin(), group.end(), std::back_inserter(out));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.token.example_id != b.token.example_id) return a.token.example_id < b.token.example_id;
    return a.token.token_index < b.token.token_index;
  });
  return out;
}

std::vector<SentenceRecord> sentence_baseline(std::span<const AnnotatedToken> annotated) {
  std::map<std::string, std::map<int, std::vector<const AnnotatedToken*>>> by_example;
  for (const auto& a : annotated) by_example[a.token.example_id][a.token.sent_index].push_back(&a);

  std::vector<SentenceRecord> out;
  for (const auto& [example_id, sentences] : by_example) {
    std::size_t i = 0;
    for (const auto& [sent_index, tokens] : sentences) {
      SentenceRecord rec;
      rec.example_id = example_id;
      rec.sent_index = sent_index;
      if (i == 0) {
        rec.position = SentencePosition::kOpening;
      } else if (i + 1 == sentences.size()) {
        rec.position = SentencePosition::kClosing;
      } else {
        rec.position = SentencePosition::kMiddle;
      }
      ++i;
      std::vector<const AnnotatedToken*> roots;
      for (const auto* t : tokens) {
        rec.stance.hedge |= t->stance.hedge;
        rec.stance.booster |= t->stance.booster;
        rec.stance.modal |= t->stance.modal;
        rec.stance.passive |= t->stance.passive;
        if (t->token.head == -1) roots.push_back(t);
      }
      if (roots.size() != 1) {
        rec.quality = Quality::kLowConfidence;
        rec.reason = roots.empty() ? "no_root" : "multiple_roots";
      } else {
        rec.root_token_index = roots[0]->token.token_index;
        rec.root_upos = roots[0]->token.upos;
        rec.root_labels = roots[0]->labels;
        rec.quality = roots[0]->quality;
        rec.reason = roots[0]->reason;
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

// --- serialisation ------------------------------------------------------------------------

void to_json(nlohmann::json& j, const AnnotatedToken& a) {
  const auto& t = a.token;
  j = {{"example_id", t.example_id},
       {"sent_index", t.sent_index},
       {"token_index", t.token_index},
       {"surface", t.surface},
       {"lemma", t.lemma},
       {"upos", t.upos},
       {"head", t.head},
       {"deprel", t.deprel},
       {"feats", t.feats},
       {"phrase_type", to_string(a.labels.phrase_type)},
       {"modifier_structure", to_string(a.labels.modifier_structure)},
       {"clause_slot", to_string(a.labels.clause_slot)},
       {"predicate_type", to_string(a.labels.predicate_type)},
       {"hedge", a.stance.hedge},
       {"booster", a.stance.booster},
       {"modal", a.stance.modal},
       {"passive", a.stance.passive},
       {"domain", to_string(a.domain)},
       {"quality", to_string(a.quality)},
       {"reason", a.reason}};
}

void from_json(const nlohmann::json& j, AnnotatedToken& a) {
  auto& t = a.token;
  t.example_id = j.at("example_id").get<std::string>();
  t.sent_index = j.at("sent_index").get<int>();
  t.token_index = j.at("token_index").get<int>();
  t.surface = j.at("surface").get<std::string>();
  t.lemma = j.at("lemma").get<std::string>();
  t.upos = j.at("upos").get<std::string>();
  t.head = j.at("head").get<int>();
  t.deprel = j.at("deprel").get<std::string>();
  t.feats = j.at("feats").get<std::map<std::string, std::string>>();
  a.labels.phrase_type = parse_phrase_type(j.at("phrase_type").get<std::string>());
  a.labels.modifier_structure = parse_modifier_structure(j.at("modifier_structure").get<std::string>());
  a.labels.clause_slot = parse_clause_slot(j.at("clause_slot").get<std::string>());
  a.labels.predicate_type = parse_predicate_type(j.at("predicate_type").get<std::string>());
  a.stance = {j.at("hedge").get<bool>(), j.at("booster").get<bool>(), j.at("modal").get<bool>(),
              j.at("passive").get<bool>()};
  a.domain = parse_domain(j.at("domain").get<std::string>());
  a.quality = parse_quality(j.at("quality").get<std::string>());
  a.reason = j.at("reason").get<std::string>();
}

void to_json(nlohmann::json& j, const SentenceRecord& s) {
  j = {{"example_id", s.example_id},
       {"sent_index", s.sent_index},
       {"root_token_index", s.root_token_index},
       {"root_upos", s.root_upos},
       {"phrase_type", to_string(s.root_labels.phrase_type)},
       {"modifier_structure", to_string(s.root_labels.modifier_structure)},
       {"clause_slot", to_string(s.root_labels.clause_slot)},
       {"predicate_type", to_string(s.root_labels.predicate_type)},
       {"position", to_string(s.position)},
       {"hedge", s.stance.hedge},
       {"booster", s.stance.booster},
       {"modal", s.stance.modal},
       {"passive", s.stance.passive},
       {"quality", to_string(s.quality)},
       {"reason", s.reason}};
}

void from_json(const nlohmann::json& j, SentenceRecord& s) {
  s.example_id = j.at("example_id").get<std::string>();
  s.sent_index = j.at("sent_index").get<int>();
  s.root_token_index = j.at("root_token_index").get<int>();
  s.root_upos = j.at("root_upos").get<std::string>();
  s.root_labels.phrase_type = parse_phrase_type(j.at("phrase_type").get<std::string>());
  s.root_labels.modifier_structure = parse_modifier_structure(j.at("modifier_structure").get<std::string>());
  s.root_labels.clause_slot = parse_clause_slot(j.at("clause_slot").get<std::string>());
  s.root_labels.predicate_type = parse_predicate_type(j.at("predicate_type").get<std::string>());
  s.position = parse_sentence_position(j.at("position").get<std::string>());
  s.stance = {j.at("hedge").get<bool>(), j.at("booster").get<bool>(), j.at("modal").get<bool>(),
              j.at("passive").get<bool>()};
  s.quality = parse_quality(j.at("quality").get<std::string>());
  s.reason = j.at("reason").get<std::string>();
}

}  // namespace probekit
