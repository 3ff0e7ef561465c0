#include "probekit/stat_battery.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

#include "probekit/special_functions.hpp"

namespace probekit {

// --- contingency tables -------------------------------------------------------------

std::int64_t ContingencyTable::n() const {
  std::int64_t total = 0;
  for (const auto& row : counts) total = std::accumulate(row.begin(), row.end(), total);
  return total;
}

double ContingencyTable::min_expected() const {
  const double total = static_cast<double>(n());
  double min_e = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows(); ++i) {
    const double r = static_cast<double>(std::accumulate(counts[i].begin(), counts[i].end(), std::int64_t{0}));
    for (std::size_t j = 0; j < cols(); ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < rows(); ++k) c += static_cast<double>(counts[k][j]);
      min_e = std::min(min_e, r * c / total);
    }
  }
  return min_e;
}

ContingencyTable make_table(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::set<std::string> rows, cols;
  for (const auto& [r, c] : pairs) {
    rows.insert(r);
    cols.insert(c);
  }
  ContingencyTable t;
  t.row_labels.assign(rows.begin(), rows.end());
  t.col_labels.assign(cols.begin(), cols.end());
  t.counts.assign(t.row_labels.size(), std::vector<std::int64_t>(t.col_labels.size(), 0));
  for (const auto& [r, c] : pairs) {
    const auto i = std::lower_bound(t.row_labels.begin(), t.row_labels.end(), r) - t.row_labels.begin();
    const auto j = std::lower_bound(t.col_labels.begin(), t.col_labels.end(), c) - t.col_labels.begin();
    ++t.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return t;
}

StatResult chi_square(const ContingencyTable& table, bool yates) {
  const std::size_t r = table.rows();
  const std::size_t c = table.cols();
  if (r < 2 || c < 2) {
    throw std::invalid_argument("chi-square needs at least a 2x2 table, got " + std::to_string(r) + "x" +
                                std::to_string(c));
  }
  std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    if (table.counts[i].size() != c) throw std::invalid_argument("chi-square: ragged table");
    for (std::size_t j = 0; j < c; ++j) {
      if (table.counts[i][j] < 0) throw std::invalid_argument("chi-square: negative count");
      row_sum[i] += static_cast<double>(table.counts[i][j]);
      col_sum[j] += static_cast<double>(table.counts[i][j]);
    }
  }
  for (double m : row_sum) {
    if (m == 0.0) throw std::invalid_argument("chi-square: a row margin is zero");
  }
  for (double m : col_sum) {
    if (m == 0.0) throw std::invalid_argument("chi-square: a column margin is zero");
  }
  const double n = std::accumulate(row_sum.begin(), row_sum.end(), 0.0);
  const bool correct = yates && r == 2 && c == 2;
  double stat = 0.0;
  double min_e = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double e = row_sum[i] * col_sum[j] / n;
      min_e = std::min(min_e, e);
      double diff = std::abs(static_cast<double>(table.counts[i][j]) - e);
      if (correct) diff = std::max(0.0, diff - 0.5);
      stat += diff * diff / e;
    }
  }
  StatResult out;
  out.test_name = correct ? "chi_square_yates" : "chi_square";
  out.statistic = stat;
  out.df = static_cast<int>((r - 1) * (c - 1));
  out.p_value = chi_square_sf(stat, *out.df);
  out.effect_name = "cramers_v";
  out.effect_size = cramers_v(stat, n, r, c);
  out.n = static_cast<std::int64_t>(n);
  if (min_e < 5.0) {
    out.warnings.push_back("minimum expected count " + std::to_string(min_e) +
                           " is below 5; Fisher's exact test is recommended");
  }
  return out;
}

double cramers_v(double chi2, double n, std::size_t r, std::size_t c) {
  const double k = static_cast<double>(std::min(r, c)) - 1.0;
  if (!(n > 0.0) || !(k > 0.0)) throw std::invalid_argument("cramers_v: need n > 0 and min(r, c) >= 2");
  return std::clamp(std::sqrt(std::max(chi2, 0.0) / (n * k)), 0.0, 1.0);
}

double fisher_exact(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  if (a < 0 || b < 0 || c < 0 || d < 0) throw std::invalid_argument("fisher_exact: negative count");
  const std::int64_t n = a + b + c + d;
  if (n == 0) throw std::invalid_argument("fisher_exact: all-zero table");
  const std::int64_t r1 = a + b, r2 = c + d, c1 = a + c;
  const std::int64_t lo = std::max<std::int64_t>(0, c1 - r2);
  const std::int64_t hi = std::min(r1, c1);
  // Log-probabilities up to a constant via the ratio p(x+1) / p(x).
  std::vector<double> logw(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (std::int64_t x = lo; x < hi; ++x) {
    const double ratio = static_cast<double>((r1 - x) * (c1 - x)) /
                         static_cast<double>((x + 1) * (r2 - c1 + x + 1));
    logw[static_cast<std::size_t>(x - lo + 1)] = logw[static_cast<std::size_t>(x - lo)] + std::log(ratio);
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  std::vector<double> w(logw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(logw[i] - top);
    total += w[i];
  }
  const double observed = w[static_cast<std::size_t>(a - lo)];
  double p = 0.0;
  for (double wi : w) {
    if (wi <= observed * (1.0 + 1e-12)) p += wi;
  }
  return std::min(1.0, p / total);
}

StatResult independence_test(const ContingencyTable& table, bool yates) {
  StatResult out = chi_square(table, yates);
  if (table.rows() == 2 && table.cols() == 2 && table.min_expected() < 5.0) {
    out.test_name = "fisher_exact";
    out.p_value = fisher_exact(table.counts[0][0], table.counts[0][1], table.counts[1][0], table.counts[1][1]);
    out.df.reset();
    out.warnings.clear();
  }
  return out;
}

// --- rank tests -------------------------------------------------------------------------------

namespace {

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

MannWhitneyResult mann_whitney(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("mann_whitney: empty sample");
  const std::size_t n1 = xs.size(), n2 = ys.size(), n = n1 + n2;
  std::vector<double> all(xs.begin(), xs.end());
  all.insert(all.end(), ys.begin(), ys.end());
  const auto ranks = midranks(all);
  const double d1 = static_cast<double>(n1), d2 = static_cast<double>(n2);
  const double r1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);

  MannWhitneyResult out;
  out.u = r1 - d1 * (d1 + 1.0) / 2.0;
  out.rank_biserial = rank_biserial(out.u, d1, d2);
  const double mu = d1 * d2 / 2.0;
  const double observed_dev = std::abs(out.u - mu);

  if (n <= kExactMannWhitneyLimit) {
    out.exact = true;
    std::size_t hits = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != n1) continue;
      double rs = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) rs += ranks[i];
      }
      const double u = rs - d1 * (d1 + 1.0) / 2.0;
      ++total;
      if (std::abs(u - mu) >= observed_dev - 1e-9) ++hits;
    }
    out.p_value = static_cast<double>(hits) / static_cast<double>(total);
    return out;
  }

  std::map<double, std::size_t> ties;
  for (double v : all) ++ties[v];
  double tie_term = 0.0;
  for (const auto& [v, t] : ties) {
    const double dt = static_cast<double>(t);
    tie_term += dt * dt * dt - dt;
  }
  const double dn = static_cast<double>(n);
  const double var = d1 * d2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (var <= 0.0) {
    out.p_value = 1.0;
    return out;
  }
  const double z = std::max(0.0, observed_dev - 0.5) / std::sqrt(var);
  out.p_value = std::min(1.0, 2.0 * normal_sf(z));
  return out;
}

std::vector<double> bonferroni(std::span<const double> p_values) {
  const double m = static_cast<double>(p_values.size());
  std::vector<double> out;
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bonferroni: p outside [0, 1]");
    out.push_back(std::min(1.0, m * p));
  }
  return out;
}

double odds_ratio(double a, double b, double c, double d, double smoothing) {
  if (smoothing == 0.0 && (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0)) {
    throw std::invalid_argument("odds_ratio: zero cell; use smoothing 0.5");
  }
  const double s = smoothing;
  return ((a + s) * (d + s)) / ((b + s) * (c + s));
}

std::vector<LogOddsEntry> log_odds_tokens(const std::map<std::string, std::int64_t>& counts_a,
                                          const std::map<std::string, std::int64_t>& counts_b,
                                          double smoothing) {
  auto total = [](const auto& m) {
    std::int64_t t = 0;
    for (const auto& [k, v] : m) t += v;
    return t;
  };
  const double ta = static_cast<double>(total(counts_a));
  const double tb = static_cast<double>(total(counts_b));
  if (!(ta > 0.0) || !(tb > 0.0)) throw std::invalid_argument("log_odds_tokens: empty corpus");
  std::set<std::string> lemmas;
  for (const auto& [k, v] : counts_a) lemmas.insert(k);
  for (const auto& [k, v] : counts_b) lemmas.insert(k);
  std::vector<LogOddsEntry> out;
  const double s = smoothing;
  for (const auto& lemma : lemmas) {
    const auto ia = counts_a.find(lemma);
    const auto ib = counts_b.find(lemma);
    const std::int64_t a = ia == counts_a.end() ? 0 : ia->second;
    const std::int64_t b = ib == counts_b.end() ? 0 : ib->second;
    const double da = static_cast<double>(a), db = static_cast<double>(b);
    const double lo = std::log(((da + s) / (ta - da + s)) / ((db + s) / (tb - db + s)));
    out.push_back({lemma, lo, a, b});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.log_odds != y.log_odds) return x.log_odds > y.log_odds;
    return x.lemma < y.lemma;
  });
  return out;
}

// --- observations ---------------------------------------------------------------------------

std::string_view to_string(WindowStanceMode m) {
  return m == WindowStanceMode::kFocusToken ? "focus_token" : "any_token";
}

WindowStanceMode parse_window_stance_mode(std::string_view s) {
  if (s == "focus_token") return WindowStanceMode::kFocusToken;
  if (s == "any_token") return WindowStanceMode::kAnyToken;
  throw ConfigError("unknown window stance mode: " + std::string(s));
}

std::vector<Observation> JoinedDataset::ok_rows() const {
  std::vector<Observation> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [](const Observation& o) { return o.quality == Quality::kOk; });
  return out;
}

namespace {

using TokenIndex = std::map<std::pair<std::string, int>, const AnnotatedToken*>;

TokenIndex index_tokens(std::span<const AnnotatedToken> annotated) {
  TokenIndex idx;
  for (const auto& a : annotated) idx[{a.token.example_id, a.token.token_index}] = &a;
  return idx;
}

std::map<std::string, const ExampleMeta*> index_meta(std::span<const ExampleMeta> meta) {
  std::map<std::string, const ExampleMeta*> out;
  for (const auto& m : meta) out[m.example_id] = &m;
  return out;
}

Observation make_observation(const ExampleMeta& m, const AnnotatedToken& a, int layer, double score) {
  Observation o;
  o.example_id = m.example_id;
  o.layer = layer;
  o.token_index = a.token.token_index;
  o.score = score;
  o.nationality = m.nationality;
  o.medium = m.medium;
  o.role = m.role;
  o.upos = a.token.upos;
  o.lemma = to_lower_ascii(a.token.lemma);
  o.labels = a.labels;
  o.stance = a.stance;
  o.domain = a.domain;
  o.quality = a.quality;
  return o;
}

}  // namespace

JoinedDataset join_windows(std::span<const WindowRecord> windows, std::span<const AnnotatedToken> annotated,
                           std::span<const ExampleMeta> meta, WindowStanceMode mode) {
  const auto tokens = index_tokens(annotated);
  const auto by_id = index_meta(meta);
  JoinedDataset out;
  out.name = "windows";
  out.n_input = windows.size();
  for (const auto& w : windows) {
    const auto it = tokens.find({w.example_id, w.focus_index});
    if (it == tokens.end()) {
      ++out.n_unaligned;
      continue;
    }
    Observation o = make_observation(*by_id.at(w.example_id), *it->second, w.layer, w.focus_score);
    if (mode == WindowStanceMode::kAnyToken) {
      for (int t = w.start; t <= w.end(); ++t) {
        const auto member = tokens.find({w.example_id, t});
        if (member == tokens.end()) continue;
        o.stance.hedge |= member->second->stance.hedge;
        o.stance.booster |= member->second->stance.booster;
        o.stance.modal |= member->second->stance.modal;
        o.stance.passive |= member->second->stance.passive;
      }
    }
    out.rows.push_back(std::move(o));
  }
  return out;
}

JoinedDataset join_singles(std::span<const TokenSelection> singles,
                           std::span<const AnnotatedToken> annotated, std::span<const ExampleMeta> meta) {
  const auto tokens = index_tokens(annotated);
  const auto by_id = index_meta(meta);
  JoinedDataset out;
  out.name = "singles";
  out.n_input = singles.size();
  for (const auto& s : singles) {
    const auto it = tokens.find({s.example_id, s.token_index});
    if (it == tokens.end()) {
      ++out.n_unaligned;
      continue;
    }
    out.rows.push_back(make_observation(*by_id.at(s.example_id), *it->second, s.layer, s.score));
  }
  return out;
}

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::kPhraseType: return "phrase_type";
    case Variable::kModifierStructure: return "modifier_structure";
    case Variable::kClauseSlot: return "clause_slot";
    case Variable::kPredicateType: return "predicate_type";
    case Variable::kUpos: return "upos";
  }
  return "phrase_type";
}

std::string value_of(const Observation& o, Variable v) {
  switch (v) {
    case Variable::kPhraseType: return std::string(to_string(o.labels.phrase_type));
    case Variable::kModifierStructure: return std::string(to_string(o.labels.modifier_structure));
    case Variable::kClauseSlot: return std::string(to_string(o.labels.clause_slot));
    case Variable::kPredicateType: return std::string(to_string(o.labels.predicate_type));
    case Variable::kUpos: return o.upos;
  }
  return {};
}

StatResult nationality_test(std::span<const Observation> rows, Variable v, bool yates) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& o : rows) pairs.emplace_back(std::string(to_string(o.nationality)), value_of(o, v));
  return independence_test(make_table(pairs), yates);
}

// --- hypotheses ------------------------------------------------------------------------------

namespace {

struct BinaryFeature {
  std::string id;
  std::string description;
  std::string family;
  bool primary;
  Nationality predicted_higher;
  std::function<bool(const Observation&)> present;
};

struct TwoByTwo {
  std::int64_t a = 0, b = 0, c = 0, d = 0;  // [[A present, A absent], [B present, B absent]]
};

// Rates, odds ratio and an independence test for class x present.
void fill_binary(HypothesisResult& r, const TwoByTwo& t, bool yates) {
  r.n_a = t.a + t.b;
  r.n_b = t.c + t.d;
  if (r.n_a == 0 || r.n_b == 0) {
    throw std::invalid_argument("hypothesis " + r.id + ": a class has no observations");
  }
  r.rate_a = static_cast<double>(t.a) / static_cast<double>(r.n_a);
  r.rate_b = static_cast<double>(t.c) / static_cast<double>(r.n_b);
  const bool zero = t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0;
  r.odds_smoothing = zero ? 0.5 : 0.0;
  r.odds_ratio = odds_ratio(static_cast<double>(t.a), static_cast<double>(t.b), static_cast<double>(t.c),
                            static_cast<double>(t.d), r.odds_smoothing);
  if (t.a + t.c == 0 || t.b + t.d == 0) {
    r.test.test_name = "degenerate";
    r.test.statistic = 0.0;
    r.test.p_value = 1.0;
    r.test.effect_name = "cramers_v";
    r.test.effect_size = 0.0;
    r.test.n = r.n_a + r.n_b;
    r.test.warnings.push_back("feature is constant across observations; no test possible");
    return;
  }
  ContingencyTable table;
  table.row_labels = {"A", "B"};
  table.col_labels = {"present", "absent"};
  table.counts = {{t.a, t.b}, {t.c, t.d}};
  r.test = independence_test(table, yates);
}

TwoByTwo tabulate(std::span<const Observation> rows, const std::function<bool(const Observation&)>& present) {
  TwoByTwo t;
  for (const auto& o : rows) {
    const bool p = present(o);
    if (o.nationality == Nationality::kA) {
      (p ? t.a : t.b)++;
    } else {
      (p ? t.c : t.d)++;
    }
  }
  return t;
}

void apply_family(std::vector<HypothesisResult>& results, const std::string& family, double alpha) {
  std::vector<double> ps;
  for (const auto& r : results) {
    if (r.family == family) ps.push_back(r.test.p_value);
  }
  const auto adjusted = bonferroni(ps);
  std::size_t k = 0;
  for (auto& r : results) {
    if (r.family != family) continue;
    r.test.p_adjusted = adjusted[k++];
    r.test.family_size = ps.size();
    const bool order = r.predicted_higher == Nationality::kA ? r.rate_a > r.rate_b : r.rate_b > r.rate_a;
    r.test.direction_confirmed = order && *r.test.p_adjusted < alpha;
  }
}

const std::vector<BinaryFeature>& hypothesis_features() {
  static const std::vector<BinaryFeature> features = {
      {"pre_modifier", "B > pre-modification", "structural", true, Nationality::kB,
       [](const Observation& o) { return o.labels.modifier_structure == ModifierStructure::kPreModifier; }},
      {"post_modifier", "A > post-modification", "structural", true, Nationality::kA,
       [](const Observation& o) { return o.labels.modifier_structure == ModifierStructure::kPostModifier; }},
      {"nominal_predicate", "B > nominal predicates", "structural", true, Nationality::kB,
       [](const Observation& o) { return o.labels.predicate_type == PredicateType::kNominal; }},
      {"adverbial_slot", "A > adverbial slot", "structural", true, Nationality::kA,
       [](const Observation& o) { return o.labels.clause_slot == ClauseSlot::kAdverbial; }},
      {"hedge", "A > hedge", "stance", true, Nationality::kA,
       [](const Observation& o) { return o.stance.hedge; }},
      {"booster", "A > booster", "stance", false, Nationality::kA,
       [](const Observation& o) { return o.stance.booster; }},
      {"modal", "A > modal", "stance", false, Nationality::kA,
       [](const Observation& o) { return o.stance.modal; }},
      {"passive", "A > passive", "stance", false, Nationality::kA,
       [](const Observation& o) { return o.stance.passive; }},
  };
  return features;
}

}  // namespace

std::vector<HypothesisResult> run_hypotheses(std::span<const Observation> rows, bool yates, double alpha) {
  std::vector<HypothesisResult> out;
  for (const auto& f : hypothesis_features()) {
    HypothesisResult r;
    r.id = f.id;
    r.description = f.description;
    r.family = f.family;
    r.primary = f.primary;
    r.predicted_higher = f.predicted_higher;
    fill_binary(r, tabulate(rows, f.present), yates);
    out.push_back(std::move(r));
  }
  apply_family(out, "structural", alpha);
  apply_family(out, "stance", alpha);
  return out;
}

// --- confounds -------------------------------------------------------------------------------

std::vector<ConfoundResult> confound_suite(std::span<const Observation> rows, bool yates) {
  struct Spec {
    std::string id;
    std::string description;
    std::function<bool(const Observation&)> keep;
    std::function<std::string(const Observation&)> group;
    Variable response;
  };
  auto nationality = [](const Observation& o) { return std::string(to_string(o.nationality)); };
  auto medium = [](const Observation& o) { return std::string(to_string(o.medium)); };
  auto role = [](const Observation& o) { return std::string(to_string(o.role)); };
  const std::vector<Spec> specs = {
      {"nationality_within_emi", "Nationality within EMI", [](const Observation& o) { return o.medium == Medium::kEMI; },
       nationality, Variable::kPhraseType},
      {"nationality_within_cmi", "Nationality within CMI", [](const Observation& o) { return o.medium == Medium::kCMI; },
       nationality, Variable::kPhraseType},
      {"medium_within_a", "Medium within A",
       [](const Observation& o) { return o.nationality == Nationality::kA && o.medium != Medium::kNone; }, medium,
       Variable::kPhraseType},
      {"medium_within_b", "Medium within B",
       [](const Observation& o) { return o.nationality == Nationality::kB && o.medium != Medium::kNone; }, medium,
       Variable::kPhraseType},
      {"role_phrase_type", "Role -> phrase type", [](const Observation&) { return true; }, role,
       Variable::kPhraseType},
      {"role_modifier_structure", "Role -> modifier structure", [](const Observation&) { return true; }, role,
       Variable::kModifierStructure},
  };
  std::vector<ConfoundResult> out;
  for (const auto& s : specs) {
    ConfoundResult r;
    r.id = s.id;
    r.description = s.description;
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& o : rows) {
      if (s.keep(o)) pairs.emplace_back(s.group(o), value_of(o, s.response));
    }
    r.subset_n = pairs.size();
    try {
      if (pairs.empty()) throw std::invalid_argument("empty subset");
      const auto table = make_table(pairs);
      if (table.rows() < 2) throw std::invalid_argument("subset contains a single group");
      r.test = independence_test(table, yates);
    } catch (const std::invalid_argument& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

// --- sentence baseline -----------------------------------------------------------------------

SentenceTests sentence_tests(std::span<const SentenceRecord> sentences, std::span<const ExampleMeta> meta,
                             bool yates) {
  const auto by_id = index_meta(meta);
  SentenceTests out;
  out.n_input = sentences.size();
  std::vector<Observation> rows;
  std::vector<SentencePosition> positions;
  for (const auto& s : sentences) {
    if (s.quality != Quality::kOk) continue;
    const auto it = by_id.find(s.example_id);
    if (it == by_id.end()) {
      out.notices.push_back("sentence of unknown example " + s.example_id + " ignored");
      continue;
    }
    Observation o;
    o.example_id = s.example_id;
    o.token_index = s.root_token_index;
    o.nationality = it->second->nationality;
    o.medium = it->second->medium;
    o.role = it->second->role;
    o.upos = s.root_upos;
    o.labels = s.root_labels;
    o.stance = s.stance;
    rows.push_back(std::move(o));
    positions.push_back(s.position);
  }
  out.n_ok = rows.size();
  for (const auto& o : rows) (o.nationality == Nationality::kA ? out.n_a : out.n_b)++;

  for (Variable v : {Variable::kPhraseType, Variable::kUpos, Variable::kPredicateType}) {
    try {
      out.structural[std::string(to_string(v))] = nationality_test(rows, v, yates);
    } catch (const std::invalid_argument& e) {
      out.structural[std::string(to_string(v))] = std::nullopt;
      out.notices.push_back(std::string(to_string(v)) + ": " + e.what());
    }
  }
  try {
    for (const auto& f : hypothesis_features()) {
      if (f.family != "stance") continue;
      HypothesisResult r;
      r.id = f.id;
      r.description = f.description;
      r.family = f.family;
      r.primary = f.primary;
      r.predicted_higher = f.predicted_higher;
      fill_binary(r, tabulate(rows, f.present), yates);
      out.stance.push_back(std::move(r));
    }
    apply_family(out.stance, "stance", 0.05);
  } catch (const std::invalid_argument& e) {
    out.stance.clear();
    out.notices.push_back(std::string("stance: ") + e.what());
  }
  try {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& st = rows[i].stance;
      const bool any = st.hedge || st.booster || st.modal || st.passive;
      pairs.emplace_back(std::string(to_string(positions[i])), any ? "marker" : "none");
    }
    out.position_by_stance = independence_test(make_table(pairs), yates);
  } catch (const std::invalid_argument& e) {
    out.notices.push_back(std::string("position x stance: ") + e.what());
  }
  return out;
}

// --- trajectory --------------------------------------------------------------------------------

DomainContrast domain_contrast(std::span<const Observation> rows, Domain domain, bool yates) {
  HypothesisResult r;
  r.id = "domain_" + to_lower_ascii(to_string(domain));
  fill_binary(r, tabulate(rows, [&](const Observation& o) { return o.domain == domain; }), yates);
  return {domain, r.rate_a, r.rate_b, r.odds_ratio, r.odds_smoothing, r.test};
}

std::vector<LayerTrajectory> layer_trajectory(std::span<const WindowRecord> windows,
                                              std::span<const ExampleMeta> meta,
                                              const std::vector<Observation>* annotated_rows, Domain contrast,
                                              bool yates) {
  const auto by_id = index_meta(meta);
  std::map<int, std::vector<const WindowRecord*>> by_layer;
  for (const auto& w : windows) by_layer[w.layer].push_back(&w);
  std::vector<LayerTrajectory> out;
  for (const auto& [layer, ws] : by_layer) {
    LayerTrajectory t;
    t.layer = layer;
    t.n_windows = ws.size();
    std::set<std::string> examples_a, examples_b;
    std::vector<double> scores_a, scores_b;
    for (const auto* w : ws) {
      if (by_id.at(w->example_id)->nationality == Nationality::kA) {
        examples_a.insert(w->example_id);
        scores_a.push_back(w->focus_score);
      } else {
        examples_b.insert(w->example_id);
        scores_b.push_back(w->focus_score);
      }
    }
    if (examples_a.size() < 2 || examples_b.size() < 2) {
      t.skipped = true;
      t.notice = "layer " + std::to_string(layer) + " skipped: " + std::to_string(examples_a.size()) +
                 " A and " + std::to_string(examples_b.size()) + " B examples (need 2 each)";
      out.push_back(std::move(t));
      continue;
    }
    t.mean_score_a = std::accumulate(scores_a.begin(), scores_a.end(), 0.0) / static_cast<double>(scores_a.size());
    t.mean_score_b = std::accumulate(scores_b.begin(), scores_b.end(), 0.0) / static_cast<double>(scores_b.size());
    t.score_gap = std::abs(t.mean_score_a - t.mean_score_b);
    t.score_test = mann_whitney(scores_a, scores_b);

    if (annotated_rows) {
      std::vector<Observation> rows;
      std::copy_if(annotated_rows->begin(), annotated_rows->end(), std::back_inserter(rows),
                   [&](const Observation& o) { return o.layer == layer; });
      for (Variable v : kAllVariables) {
        try {
          t.variables[std::string(to_string(v))] = nationality_test(rows, v, yates);
        } catch (const std::invalid_argument&) {
          t.variables[std::string(to_string(v))] = std::nullopt;
        }
      }
      try {
        t.domain = domain_contrast(rows, contrast, yates);
      } catch (const std::invalid_argument&) {
        t.domain.reset();
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

// --- serialisation --------------------------------------------------------------------------------

namespace {

template <class T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

void to_json(nlohmann::json& j, const StatResult& r) {
  j = {{"test_name", r.test_name},
       {"statistic", r.statistic},
       {"df", opt(r.df)},
       {"p_value", r.p_value},
       {"effect_name", r.effect_name},
       {"effect_size", r.effect_size},
       {"n", r.n},
       {"p_adjusted", opt(r.p_adjusted)},
       {"family_size", opt(r.family_size)},
       {"direction_confirmed", opt(r.direction_confirmed)},
       {"warnings", r.warnings}};
}

void to_json(nlohmann::json& j, const MannWhitneyResult& r) {
  j = {{"u", r.u}, {"p_value", r.p_value}, {"exact", r.exact}, {"rank_biserial", r.rank_biserial}};
}

void to_json(nlohmann::json& j, const HypothesisResult& r) {
  j = {{"id", r.id},
       {"description", r.description},
       {"family", r.family},
       {"primary", r.primary},
       {"predicted_higher", to_string(r.predicted_higher)},
       {"rate_a", r.rate_a},
       {"rate_b", r.rate_b},
       {"n_a", r.n_a},
       {"n_b", r.n_b},
       {"odds_ratio", r.odds_ratio},
       {"odds_smoothing", r.odds_smoothing},
       {"test", r.test}};
}

void to_json(nlohmann::json& j, const ConfoundResult& r) {
  j = {{"id", r.id},
       {"description", r.description},
       {"subset_n", r.subset_n},
       {"test", opt(r.test)},
       {"error", r.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.error)}};
}

void to_json(nlohmann::json& j, const SentenceTests& r) {
  nlohmann::json structural = nlohmann::json::object();
  for (const auto& [k, v] : r.structural) structural[k] = opt(v);
  j = {{"n_input", r.n_input},
       {"n_ok", r.n_ok},
       {"n_a", r.n_a},
       {"n_b", r.n_b},
       {"structural", structural},
       {"stance", r.stance},
       {"position_by_stance", opt(r.position_by_stance)},
       {"notices", r.notices}};
}

void to_json(nlohmann::json& j, const DomainContrast& r) {
  j = {{"domain", to_string(r.domain)},
       {"rate_a", r.rate_a},
       {"rate_b", r.rate_b},
       {"odds_ratio", r.odds_ratio},
       {"odds_smoothing", r.odds_smoothing},
       {"test", r.test}};
}

void to_json(nlohmann::json& j, const LayerTrajectory& r) {
  nlohmann::json variables = nlohmann::json::object();
  for (const auto& [k, v] : r.variables) variables[k] = opt(v);
  j = {{"layer", r.layer},
       {"skipped", r.skipped},
       {"notice", r.notice},
       {"n_windows", r.n_windows},
       {"mean_score_a", r.mean_score_a},
       {"mean_score_b", r.mean_score_b},
       {"score_gap", r.score_gap},
       {"score_test", opt(r.score_test)},
       {"variables", variables},
       {"domain", opt(r.domain)}};
}

void to_json(nlohmann::json& j, const LogOddsEntry& e) {
  j = {{"lemma", e.lemma}, {"log_odds", e.log_odds}, {"count_a", e.count_a}, {"count_b", e.count_b}};
}

}  // namespace probekit
