#include <doctest.h>

#include <cmath>

#include "probekit/special_functions.hpp"
#include "probekit/stat_battery.hpp"
#include "test_support.hpp"

using namespace probekit;
namespace pt = probekit::testing;

namespace {

ContingencyTable two_by_two(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  ContingencyTable t;
  t.row_labels = {"A", "B"};
  t.col_labels = {"x", "y"};
  t.counts = {{a, b}, {c, d}};
  return t;
}

Observation obs(Nationality n, int i) {
  Observation o;
  o.example_id = "e" + std::to_string(i);
  o.nationality = n;
  o.medium = i % 3 == 0 ? Medium::kEMI : i % 3 == 1 ? Medium::kCMI : Medium::kNone;
  o.role = o.medium == Medium::kNone ? Role::kStudent : Role::kPostdoc;
  o.upos = "NOUN";
  o.lemma = "thing";
  o.labels.phrase_type = i % 2 ? PhraseType::kNominal : PhraseType::kVerbal;
  return o;
}

}  // namespace

TEST_CASE("chi-square matches the 2x2 closed form on random tables") {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::int64_t v[4];
    for (auto& x : v) x = 1 + static_cast<std::int64_t>(rng.below(200));
    for (bool yates : {false, true}) {
      const auto r = chi_square(two_by_two(v[0], v[1], v[2], v[3]), yates);
      const double want = pt::oracle_chi2_2x2(v[0], v[1], v[2], v[3], yates);
      CHECK(std::abs(r.statistic - want) <= 1e-9 * std::max(want, 1e-300) + 1e-300);
      CHECK(r.df == 1);
      CHECK(r.p_value == doctest::Approx(chi_square_sf(want, 1)).epsilon(1e-9));
    }
  }
}

TEST_CASE("chi-square on larger tables and its guards") {
  ContingencyTable t;
  t.row_labels = {"A", "B"};
  t.col_labels = {"x", "y", "z"};
  t.counts = {{10, 20, 30}, {30, 20, 10}};
  const auto r = chi_square(t);
  // Expected 20 in every cell: (100 + 0 + 100) * 2 / 20.
  CHECK(r.statistic == doctest::Approx(20.0));
  CHECK(r.df == 2);
  CHECK(r.effect_size == doctest::Approx(std::sqrt(20.0 / 120)));
  CHECK(r.warnings.empty());
  t.counts = {{1, 0, 3}, {2, 0, 1}};
  CHECK_THROWS_AS(chi_square(t), std::invalid_argument);
  t.counts = {{1, 2, 3}};
  t.row_labels = {"A"};
  CHECK_THROWS_AS(chi_square(t), std::invalid_argument);
  const auto small = chi_square(two_by_two(1, 2, 3, 4));
  CHECK_FALSE(small.warnings.empty());
}

TEST_CASE("Fisher matches exact enumeration on every table up to n = 20") {
  for (int n = 1; n <= 20; ++n)
    for (int a = 0; a <= n; ++a)
      for (int b = 0; a + b <= n; ++b)
        for (int c = 0; a + b + c <= n; ++c) {
          const int d = n - a - b - c;
          CHECK(std::abs(fisher_exact(a, b, c, d) - pt::oracle_fisher(a, b, c, d)) <= 1e-12);
        }
  CHECK_THROWS_AS(fisher_exact(0, 0, 0, 0), std::invalid_argument);
  // Textbook example: tea tasting, [[3, 1], [1, 3]] -> 0.4857.
  CHECK(fisher_exact(3, 1, 1, 3) == doctest::Approx(34.0 / 70.0));
}

TEST_CASE("independence_test switches to Fisher for sparse 2x2 tables") {
  const auto r = independence_test(two_by_two(1, 9, 8, 2));
  CHECK(r.test_name == "fisher_exact");
  CHECK_FALSE(r.df.has_value());
  CHECK(r.p_value == doctest::Approx(pt::oracle_fisher(1, 9, 8, 2)));
  CHECK(r.statistic == doctest::Approx(pt::oracle_chi2_2x2(1, 9, 8, 2, false)));
  const auto big = independence_test(two_by_two(30, 20, 20, 30));
  CHECK(big.test_name == "chi_square");
}

TEST_CASE("Cramer's V reproduces the published values") {
  CHECK(std::abs(cramers_v(27.87, 6961, 2, 2) - 0.063) <= 0.001);
  CHECK(std::abs(cramers_v(46.82, 6961, 2, 2) - 0.082) <= 0.001);
  CHECK(std::abs(cramers_v(79.93, 6961, 2, 2) - 0.107) <= 0.001);
  CHECK(std::abs(cramers_v(32.29, 1246, 2, 6) - 0.161) <= 0.001);
  CHECK(cramers_v(1e9, 10, 2, 2) == 1.0);
  CHECK_THROWS_AS(cramers_v(1, 0, 2, 2), std::invalid_argument);
}

TEST_CASE("Mann-Whitney exact p matches relabelling enumeration") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n1 = 1 + rng.below(6), n2 = 1 + rng.below(12 - n1);
    std::vector<double> xs(n1), ys(n2);
    const bool ties = trial % 2 == 0;
    for (auto& x : xs) x = ties ? static_cast<double>(rng.below(4)) : rng.normal();
    for (auto& y : ys) y = ties ? static_cast<double>(rng.below(4)) + 0.5 * (trial % 4 == 0) : rng.normal() + 0.7;
    const auto r = mann_whitney(xs, ys);
    CHECK(r.exact);
    CHECK(r.u == doctest::Approx(pt::oracle_mann_whitney_u(xs, ys)));
    CHECK(std::abs(r.p_value - pt::oracle_mann_whitney_p(xs, ys)) <= 0.02);
    CHECK(r.rank_biserial == doctest::Approx(1 - 2 * r.u / static_cast<double>(n1 * n2)));
  }
  CHECK_THROWS_AS(mann_whitney(std::vector<double>{}, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("Mann-Whitney normal approximation stays close to exact just above the cutoff") {
  Rng rng(9);
  double worst = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> xs(7), ys(7);
    for (auto& x : xs) x = rng.normal();
    for (auto& y : ys) y = rng.normal() + 0.8;
    const auto r = mann_whitney(xs, ys);
    CHECK_FALSE(r.exact);
    worst = std::max(worst, std::abs(r.p_value - pt::oracle_mann_whitney_p(xs, ys)));
  }
  MESSAGE("largest approximation error at n1 = n2 = 7: " << worst);
  CHECK(worst <= 0.02);
}

TEST_CASE("Bonferroni and odds ratios") {
  const auto adj = bonferroni(std::vector<double>{0.007, 0.2, 0.5, 0.01});
  CHECK(adj[0] == doctest::Approx(0.028));
  CHECK(adj[2] == 1.0);
  CHECK(odds_ratio(10, 5, 4, 8) == doctest::Approx((10.0 * 8) / (5.0 * 4)));
  CHECK(odds_ratio(0, 5, 4, 8, 0.5) == doctest::Approx((0.5 * 8.5) / (5.5 * 4.5)));
  CHECK_THROWS_AS(odds_ratio(0, 5, 4, 8), std::invalid_argument);
}

TEST_CASE("log-odds ranks distinctive lemmas") {
  const std::map<std::string, std::int64_t> a{{"x", 50}, {"y", 10}, {"z", 40}};
  const std::map<std::string, std::int64_t> b{{"x", 10}, {"y", 50}, {"z", 40}};
  const auto r = log_odds_tokens(a, b);
  REQUIRE(r.size() == 3);
  CHECK(r.front().lemma == "x");
  CHECK(r.back().lemma == "y");
  const double expect_x = std::log((50.5 / 50.5) / (10.5 / 90.5));
  CHECK(r.front().log_odds == doctest::Approx(expect_x));
  CHECK(r.front().log_odds == doctest::Approx(-r.back().log_odds));
}

TEST_CASE("hypotheses: rates, odds direction, families and confirmation") {
  std::vector<Observation> rows;
  for (int i = 0; i < 100; ++i) {
    Observation o = obs(Nationality::kA, i);
    o.stance.hedge = i < 40;
    o.labels.modifier_structure = i < 10 ? ModifierStructure::kPreModifier : ModifierStructure::kNone;
    rows.push_back(o);
  }
  for (int i = 0; i < 100; ++i) {
    Observation o = obs(Nationality::kB, 100 + i);
    o.stance.hedge = i < 10;
    o.labels.modifier_structure = i < 30 ? ModifierStructure::kPreModifier : ModifierStructure::kNone;
    rows.push_back(o);
  }
  const auto hs = run_hypotheses(rows);
  REQUIRE(hs.size() == 8);
  std::map<std::string, HypothesisResult> by_id;
  for (const auto& h : hs) by_id[h.id] = h;
  const auto& hedge = by_id.at("hedge");
  CHECK(hedge.rate_a == doctest::Approx(0.4));
  CHECK(hedge.rate_b == doctest::Approx(0.1));
  CHECK(hedge.odds_ratio == doctest::Approx((40.0 / 60) / (10.0 / 90)));
  CHECK(hedge.test.family_size == 4);
  CHECK(*hedge.test.p_adjusted == doctest::Approx(std::min(1.0, 4 * hedge.test.p_value)));
  CHECK(*hedge.test.direction_confirmed);
  const auto& pre = by_id.at("pre_modifier");
  CHECK(pre.predicted_higher == Nationality::kB);
  CHECK(pre.odds_ratio < 1.0);
  CHECK(*pre.test.direction_confirmed);
  const auto& passive = by_id.at("passive");
  CHECK(passive.test.test_name == "degenerate");
  CHECK_FALSE(*passive.test.direction_confirmed);
  CHECK_FALSE(passive.primary);
  CHECK(passive.odds_smoothing == 0.5);
  std::vector<Observation> only_a(rows.begin(), rows.begin() + 100);
  CHECK_THROWS_AS(run_hypotheses(only_a), std::invalid_argument);
}

TEST_CASE("confound suite restricts subsets as described") {
  std::vector<Observation> rows;
  for (int i = 0; i < 60; ++i) rows.push_back(obs(i % 2 ? Nationality::kB : Nationality::kA, i));
  const auto cs = confound_suite(rows);
  REQUIRE(cs.size() == 6);
  std::map<std::string, ConfoundResult> by_id;
  for (const auto& c : cs) by_id[c.id] = c;
  CHECK(by_id.at("nationality_within_emi").subset_n == 20);
  CHECK(by_id.at("medium_within_a").subset_n == 20);
  CHECK(by_id.at("role_phrase_type").subset_n == 60);
  // Modifier structure is constant, so that table has a single column.
  CHECK_FALSE(by_id.at("role_modifier_structure").test.has_value());
  CHECK_FALSE(by_id.at("role_modifier_structure").error.empty());
  CHECK(by_id.at("role_phrase_type").test.has_value());
}

TEST_CASE("joins align selections with annotations and count gaps") {
  ExampleMeta m;
  m.example_id = "e1";
  m.nationality = Nationality::kB;
  m.cohort = "B_NONE_STUDENT";
  std::vector<ExampleMeta> meta{m};
  std::vector<AnnotatedToken> ann(5);
  for (int i = 0; i < 5; ++i) {
    ann[i].token.example_id = "e1";
    ann[i].token.token_index = i;
    ann[i].token.upos = "NOUN";
    ann[i].stance.hedge = i == 1;
  }
  WindowRecord w;
  w.example_id = "e1";
  w.layer = 2;
  w.start = 0;
  w.width = 3;
  w.focus_index = 1;
  WindowRecord far = w;
  far.start = 8;
  far.focus_index = 9;
  std::vector<WindowRecord> ws{w, far};
  const auto j = join_windows(ws, ann, meta, WindowStanceMode::kFocusToken);
  CHECK(j.n_input == 2);
  CHECK(j.n_unaligned == 1);
  REQUIRE(j.rows.size() == 1);
  CHECK(j.rows[0].stance.hedge);
  CHECK(j.rows[0].nationality == Nationality::kB);
  ws[0].focus_index = 2;
  ws[0].start = 1;
  CHECK_FALSE(join_windows(ws, ann, meta, WindowStanceMode::kFocusToken).rows[0].stance.hedge);
  CHECK(join_windows(ws, ann, meta, WindowStanceMode::kAnyToken).rows[0].stance.hedge);
  std::vector<TokenSelection> singles{{"e1", 2, 4, 1.0}};
  const auto js = join_singles(singles, ann, meta);
  CHECK(js.rows.size() == 1);
  CHECK(js.ok_rows().size() == 1);
}

TEST_CASE("trajectory skips thin layers and measures score gaps") {
  std::vector<ExampleMeta> meta;
  for (int i = 0; i < 6; ++i) {
    ExampleMeta m;
    m.example_id = "e" + std::to_string(i);
    m.nationality = i < 3 ? Nationality::kA : Nationality::kB;
    meta.push_back(m);
  }
  std::vector<WindowRecord> ws;
  for (int i = 0; i < 6; ++i) {
    WindowRecord w;
    w.example_id = meta[i].example_id;
    w.layer = 4;
    w.focus_score = i < 3 ? -1.0 - i : 2.0 + i;
    ws.push_back(w);
  }
  WindowRecord lone = ws[0];
  lone.layer = 7;
  ws.push_back(lone);
  const auto t = layer_trajectory(ws, meta, nullptr, Domain::kSociocultural);
  REQUIRE(t.size() == 2);
  CHECK(t[0].layer == 4);
  CHECK_FALSE(t[0].skipped);
  CHECK(t[0].mean_score_a == doctest::Approx(-2.0));
  CHECK(t[0].mean_score_b == doctest::Approx(6.0));
  CHECK(t[0].score_gap == doctest::Approx(8.0));
  CHECK(t[0].score_test->exact);
  CHECK(t[0].variables.empty());
  CHECK(t[1].skipped);
  CHECK_FALSE(t[1].notice.empty());
}

TEST_CASE("sentence tests count sentences and test stance markers") {
  std::vector<ExampleMeta> meta;
  std::vector<SentenceRecord> sentences;
  for (int e = 0; e < 20; ++e) {
    ExampleMeta m;
    m.example_id = "e" + std::to_string(e);
    m.nationality = e % 2 ? Nationality::kB : Nationality::kA;
    meta.push_back(m);
    for (int s = 0; s < 3; ++s) {
      SentenceRecord r;
      r.example_id = m.example_id;
      r.sent_index = s;
      r.root_upos = s == 1 ? "NOUN" : "VERB";
      r.root_labels.phrase_type = s == 1 ? PhraseType::kNominal : PhraseType::kVerbal;
      r.root_labels.predicate_type = s == 1 ? PredicateType::kNominal : PredicateType::kVerbal;
      r.position = s == 0 ? SentencePosition::kOpening : s == 1 ? SentencePosition::kMiddle : SentencePosition::kClosing;
      r.stance.hedge = s == 0 && e % 2 == 0;
      r.quality = e == 0 && s == 2 ? Quality::kLowConfidence : Quality::kOk;
      sentences.push_back(r);
    }
  }
  const auto t = sentence_tests(sentences, meta);
  CHECK(t.n_input == 60);
  CHECK(t.n_ok == 59);
  CHECK(t.n_a + t.n_b == 59);
  REQUIRE(t.stance.size() == 4);
  CHECK(t.stance[0].id == "hedge");
  CHECK(t.stance[0].rate_a > t.stance[0].rate_b);
  CHECK(t.structural.count("phrase_type"));
  CHECK(t.position_by_stance.has_value());
}

TEST_CASE("stat results serialise with every documented key") {
  const auto r = chi_square(two_by_two(10, 20, 30, 40));
  const nlohmann::json j = r;
  for (const char* k : {"test_name", "statistic", "df", "p_value", "effect_name", "effect_size", "n", "p_adjusted",
                        "family_size", "direction_confirmed", "warnings"})
    CHECK_MESSAGE(j.contains(k), k);
  CHECK(j["p_adjusted"].is_null());
}
