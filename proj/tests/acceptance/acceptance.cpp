// Acceptance gate: one PASS/FAIL line per primary criterion. Seeds are fixed
// here, before any run; a red line is reported as-is.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <set>

#include "probekit/control_suite.hpp"
#include "probekit/pipeline.hpp"
#include "probekit/probe_engine.hpp"
#include "probekit/signal_extraction.hpp"
#include "probekit/special_functions.hpp"
#include "probekit/stat_battery.hpp"
#include "probekit/synth_oracle.hpp"
#include "test_support.hpp"

using namespace probekit;
namespace pt = probekit::testing;

namespace {

constexpr std::uint64_t kPlantSeed = 20240601;
constexpr std::uint64_t kNullSeed = 20240602;
constexpr std::uint64_t kSplitSeed = 7;
constexpr std::uint64_t kProbeSeed = 11;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

SynthConfig headline_config(double strength, std::uint64_t seed) {
  SynthConfig c = SynthConfig::planted_at(18, strength, 36);
  c.n_examples = 270;
  c.hidden_dim = 64;
  c.min_tokens = 150;
  c.max_tokens = 250;
  c.seed = seed;
  return c;
}

ProbeConfig probe_config() {
  ProbeConfig p;
  p.seed = kProbeSeed;
  return p;
}

// Shared between the planted-layer and selectivity criteria.
struct PlantedRun {
  SynthCorpus synth;
  Split split;
  LayerSweepResult sweep;
};

const PlantedRun& planted_run() {
  static const PlantedRun run = [] {
    PlantedRun r;
    r.synth = generate(headline_config(1.0, kPlantSeed));
    r.split = make_split(r.synth.corpus.meta, 0.8, StratifyKey::kCohort, kSplitSeed);
    r.sweep = layer_sweep(r.synth.corpus.store, r.synth.corpus.meta, Target::kNationality, r.split, probe_config());
    return r;
  }();
  return run;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome planted_layer_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const PlantedRun& r = planted_run();
  const double elapsed = seconds_since(t0);
  const double at_plant = r.sweep.per_layer[18].mean_acc;
  double worst_null = 0.0;
  for (std::size_t l = 0; l < r.sweep.per_layer.size(); ++l)
    if (l != 18) worst_null = std::max(worst_null, r.sweep.per_layer[l].mean_acc);
  const bool pass = r.sweep.best_layer == 18 && at_plant >= 0.95 && worst_null <= 0.65 && elapsed <= 300.0;
  return {pass, fmt::format("best layer {}, CV at 18 = {:.4f}, max CV elsewhere = {:.4f}, sweep {:.1f}s",
                            r.sweep.best_layer, at_plant, worst_null, elapsed)};
}

Outcome null_signal_control() {
  const SynthCorpus synth = generate(headline_config(0.0, kNullSeed));
  const auto& c = synth.corpus;
  const Split split = make_split(c.meta, 0.8, StratifyKey::kCohort, kSplitSeed);
  const ProbeConfig pc = probe_config();
  const auto sweep = layer_sweep(c.store, c.meta, Target::kNationality, split, pc);

  // Fold sizes of the CV protocol; the mean of k fold accuracies has
  // variance sum(0.25 / m_f) / k^2 under the null.
  const auto labeled = labels_for(c.meta, Target::kNationality, split.train_ids);
  const auto folds = stratified_folds(labeled.y, 2, pc.k_folds, pc.seed);
  std::vector<double> sizes(static_cast<std::size_t>(pc.k_folds), 0.0);
  for (int f : folds) sizes[static_cast<std::size_t>(f)] += 1.0;
  double var = 0.0;
  for (double m : sizes) var += 0.25 / m;
  const double sigma = std::sqrt(var) / pc.k_folds;

  int outside = 0;
  double worst = 0.0;
  for (const auto& layer : sweep.per_layer) {
    const double dev = std::abs(layer.mean_acc - 0.5);
    worst = std::max(worst, dev);
    outside += dev > 3 * sigma;
  }
  const Eigen::MatrixXd X = centroid_matrix(c.store, labeled.ids, static_cast<std::size_t>(sweep.best_layer));
  const auto shuffled = shuffled_baseline(X, labeled.y, 2, pc, 100, derive_seed(kNullSeed, 3));
  const bool shuffle_ok = std::abs(shuffled.mean_shuffled_acc - 0.5) <= 0.05;
  return {outside == 0 && shuffle_ok,
          fmt::format("sigma {:.4f}; {} of {} layers outside 0.5 +/- 3 sigma (largest |CV - 0.5| = {:.4f}); "
                      "shuffled mean over 100 permutations = {:.4f}",
                      sigma, outside, sweep.per_layer.size(), worst, shuffled.mean_shuffled_acc)};
}

Outcome selectivity_identity() {
  const PlantedRun& r = planted_run();
  const auto labeled = labels_for(r.synth.corpus.meta, Target::kNationality, r.split.train_ids);
  const Eigen::MatrixXd X = centroid_matrix(r.synth.corpus.store, labeled.ids, 18);
  const double cv = r.sweep.per_layer[18].mean_acc;
  const auto shuffled = shuffled_baseline(X, labeled.y, 2, probe_config(), 100, 5);
  const double sel = selectivity(cv, shuffled.mean_shuffled_acc);
  bool pass = sel == cv - shuffled.mean_shuffled_acc;

  // Published triplets, at their three-decimal precision.
  const double triplets[][3] = {{0.968, 0.499, 0.469}, {0.884, 0.504, 0.380}, {0.940, 0.575, 0.365}};
  for (const auto& t : triplets) pass &= std::abs(std::round(selectivity(t[0], t[1]) * 1000) / 1000 - t[2]) < 1e-12;
  return {pass, fmt::format("planted run: {:.4f} - {:.4f} = {:.4f}; three published triplets consistent", cv,
                            shuffled.mean_shuffled_acc, sel)};
}

Outcome cramers_v_cross_checks() {
  const double cases[][2] = {{27.87, 0.063}, {46.82, 0.082}, {79.93, 0.107}};
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    const double v = cramers_v(c[0], 6961, 2, 2);
    pass &= std::abs(v - c[1]) <= 0.001;
    detail += fmt::format("chi2 {} -> V {:.4f} (expected {}); ", c[0], v, c[1]);
  }
  return {pass, detail};
}

Outcome statistical_oracles() {
  Rng rng(31);
  double chi_worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::int64_t v[4];
    for (auto& x : v) x = 1 + static_cast<std::int64_t>(rng.below(500));
    ContingencyTable t;
    t.row_labels = {"A", "B"};
    t.col_labels = {"x", "y"};
    t.counts = {{v[0], v[1]}, {v[2], v[3]}};
    const double got = chi_square(t).statistic;
    const double want = pt::oracle_chi2_2x2(v[0], v[1], v[2], v[3], false);
    if (want > 0) chi_worst = std::max(chi_worst, std::abs(got - want) / want);
  }

  double fisher_worst = 0.0;
  std::size_t fisher_tables = 0;
  for (int n = 1; n <= 40; ++n)
    for (int a = 0; a <= n; ++a)
      for (int b = 0; a + b <= n; ++b)
        for (int c = 0; a + b + c <= n; ++c) {
          const int d = n - a - b - c;
          fisher_worst = std::max(fisher_worst, std::abs(fisher_exact(a, b, c, d) - pt::oracle_fisher(a, b, c, d)));
          ++fisher_tables;
        }

  double mw_worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    const std::size_t n1 = 1 + rng.below(6), n2 = 1 + rng.below(12 - n1);
    std::vector<double> xs(n1), ys(n2);
    for (auto& x : xs) x = i % 2 ? rng.normal() : static_cast<double>(rng.below(5));
    for (auto& y : ys) y = i % 2 ? rng.normal() + 0.5 : static_cast<double>(rng.below(5));
    mw_worst = std::max(mw_worst, std::abs(mann_whitney(xs, ys).p_value - pt::oracle_mann_whitney_p(xs, ys)));
  }

  // Reference values computed with mpmath at 50 digits.
  struct Pinned {
    std::function<double()> f;
    double expected;
  };
  const std::vector<Pinned> pinned = {
      {[] { return regularized_gamma_p(0.5, 0.3); }, 0.56142197391900013648},
      {[] { return regularized_gamma_p(1, 1); }, 0.6321205588285576784},
      {[] { return regularized_gamma_p(2.5, 1.7); }, 0.36143007689620490988},
      {[] { return regularized_gamma_p(10, 7.5); }, 0.22359238698028556698},
      {[] { return regularized_gamma_q(3, 8); }, 0.013753967744002985392},
      {[] { return regularized_gamma_q(0.5, 4); }, 0.0046777349810472658379},
      {[] { return regularized_gamma_q(25, 40); }, 0.0044826565655732045619},
      {[] { return regularized_gamma_q(100, 90); }, 0.8417790108135698319},
      {[] { return chi_square_sf(27.87, 1); }, 1.2974594676105291417e-7},
      {[] { return chi_square_sf(6.05, 3); }, 0.10920279484657291418},
      {[] { return chi_square_sf(79.93, 10); }, 5.181593930937578848e-13},
      {[] { return normal_sf(1.96); }, 0.024997895148220436213},
      {[] { return normal_sf(-0.5); }, 0.69146246127401310364},
      {[] { return normal_sf(5); }, 2.8665157187919391167e-7},
  };
  double special_worst = 0.0;
  for (const auto& p : pinned) special_worst = std::max(special_worst, std::abs(p.f() - p.expected) / p.expected);

  const bool pass = chi_worst <= 1e-9 && fisher_worst <= 1e-12 && mw_worst <= 0.02 && special_worst <= 1e-10;
  return {pass, fmt::format("chi2 max rel err {:.2e} (1000 tables); Fisher max abs err {:.2e} ({} tables, n<=40); "
                            "Mann-Whitney max |dp| {:.2e}; special functions max rel err {:.2e} ({} values)",
                            chi_worst, fisher_worst, fisher_tables, mw_worst, special_worst, pinned.size())};
}

Outcome optimizer_correctness() {
  Rng rng(41);
  double worst_grad = 0.0, worst_final = 0.0;
  const ProbeConfig pc = probe_config();
  for (int problem = 0; problem < 5; ++problem) {
    const int k = problem < 3 ? 2 : 3;
    const int n = 40 + 10 * problem, d = 3 + problem;
    Eigen::MatrixXd X(n, d);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = i % k;
      for (int j = 0; j < d; ++j) X(i, j) = rng.normal() + (j == i % k ? 1.0 : 0.0);
    }
    const int n_params = k == 2 ? d + 1 : k * (d + 1);
    Eigen::VectorXd params(n_params);
    for (int i = 0; i < n_params; ++i) params(i) = rng.normal();
    Eigen::VectorXd grad;
    probe_objective(X, y, k, 1.0, params, &grad);
    for (int i = 0; i < n_params; ++i) {
      Eigen::VectorXd p = params;
      const double h = 1e-6;
      p(i) = params(i) + h;
      const double fp = probe_objective(X, y, k, 1.0, p, nullptr);
      p(i) = params(i) - h;
      const double fm = probe_objective(X, y, k, 1.0, p, nullptr);
      const double fd = (fp - fm) / (2 * h);
      worst_grad = std::max(worst_grad, std::abs(grad(i) - fd) / std::max(1.0, std::abs(fd)));
    }
    std::vector<std::string> classes;
    for (int c = 0; c < k; ++c) classes.push_back("c" + std::to_string(c));
    const ProbeModel m = train_probe(X, y, classes, pc);
    worst_final = std::max(worst_final, m.optimizer.grad_max_abs);
  }
  return {worst_grad <= 1e-5 && worst_final <= 10 * pc.grad_tol,
          fmt::format("max relative gradient error {:.2e}; max final |grad| {:.2e} (limit {:.0e})", worst_grad,
                      worst_final, 10 * pc.grad_tol)};
}

Outcome extraction_equivalence() {
  Rng rng(51);
  std::size_t mismatches = 0, overlaps = 0;
  auto same = [](const std::vector<WindowRecord>& a, const std::vector<WindowRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].start != b[i].start || a[i].focus_index != b[i].focus_index ||
          std::abs(a[i].mean_abs_score - b[i].mean_abs_score) > 1e-12 || a[i].token_scores != b[i].token_scores)
        return false;
    }
    return true;
  };
  auto check_disjoint = [&](std::span<const WindowRecord> windows, std::span<const TokenSelection> singles) {
    std::set<std::tuple<std::string, int, int>> anchors;
    for (const auto& w : windows) anchors.insert({w.example_id, w.layer, w.focus_index});
    for (const auto& s : singles) overlaps += anchors.count({s.example_id, s.layer, s.token_index});
  };
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores(10 + rng.below(120));
    for (auto& s : scores) s = trial % 4 == 0 ? std::round(rng.normal() * 2) / 2 : rng.normal();
    const int width = 1 + 2 * static_cast<int>(rng.below(4));
    const auto candidates = window_scan(scores, width);
    mismatches += !same(candidates, pt::oracle_windows(scores, width));
    const double tau = 0.5 + rng.uniform();
    for (bool greedy : {true, false}) {
      const auto kept =
          select_windows(candidates, tau, greedy ? OverlapMode::kGreedyNonOverlap : OverlapMode::kPerAnchor);
      mismatches += !same(kept, pt::oracle_select(candidates, tau, greedy));
      const auto singles = select_single_tokens(scores, tau, kept);
      std::vector<int> idx;
      for (const auto& s : singles) idx.push_back(s.token_index);
      mismatches += idx != pt::oracle_singles(scores, tau, kept);
      check_disjoint(kept, singles);
    }
    std::vector<double> abs;
    for (double v : scores) abs.push_back(std::abs(v));
    mismatches += order_statistic_threshold(abs, 0.1) != pt::oracle_threshold(scores, 0.1);
  }

  SynthConfig sc = headline_config(4.0, kPlantSeed + 1);
  sc.n_examples = 120;
  sc.token_sparsity = 0.1;
  const auto synth = generate(sc);
  const auto& c = synth.corpus;
  const Split split = make_split(c.meta, 0.8, StratifyKey::kCohort, kSplitSeed);
  ExtractionConfig ec;
  ec.sampled_layers = {2, 18};
  ec.reference_layer = 18;
  const auto scores = score_sampled_layers(c.store, c.meta, split, Target::kNationality, probe_config(), ec);
  const auto result = run_extraction(scores, split.train_ids, ec);
  check_disjoint(result.windows, result.singles);
  std::vector<TokenSelection> at_plant;
  for (const auto& s : result.singles)
    if (s.layer == 18) at_plant.push_back(s);
  const auto score = score_selection(at_plant, synth.plant, 18, 99);
  const double lift = score.lift.value_or(0.0);
  return {mismatches == 0 && overlaps == 0 && lift >= 5.0,
          fmt::format("{} oracle mismatches over 100 arrays; {} single/anchor overlaps; sparse plant: {} singles, "
                      "precision {:.3f}, random baseline {:.3f}, lift {:.2f}",
                      mismatches, overlaps, at_plant.size(), score.precision.value_or(0.0), score.baseline_hit_rate,
                      lift)};
}

Outcome golden_fixture() {
  const auto sentences = pt::load_golden(pt::fixture_path("golden_ud.tsv"));
  const auto mismatches = pt::check_golden(sentences);
  StanceFlags any;
  std::size_t tokens = 0;
  for (const auto& s : sentences)
    for (const auto& g : s.tokens) {
      ++tokens;
      any.hedge |= g.stance.hedge;
      any.booster |= g.stance.booster;
      any.modal |= g.stance.modal;
      any.passive |= g.stance.passive;
    }
  std::string first;
  if (!mismatches.empty())
    first = fmt::format("; first: {} token {} {} expected {} got {}", mismatches[0].sentence,
                        mismatches[0].token_index, mismatches[0].field, mismatches[0].expected, mismatches[0].actual);
  const bool all_flags = any.hedge && any.booster && any.modal && any.passive;
  return {sentences.size() >= 30 && mismatches.empty() && all_flags,
          fmt::format("{} sentences, {} tokens, {} mismatches{}", sentences.size(), tokens, mismatches.size(), first)};
}

Outcome determinism() {
  pt::TempDir dir("acceptance_det");
  SynthConfig sc = SynthConfig::planted_at(6, 2.0, 12);
  sc.n_examples = 90;
  sc.hidden_dim = 32;
  sc.min_tokens = 60;
  sc.max_tokens = 90;
  sc.token_sparsity = 0.3;
  sc.seed = kPlantSeed + 2;
  sc.with_tokens = true;
  save_synth(generate(sc), sc, dir.path() / "corpus");
  RunConfig rc;
  rc.corpus_dir = dir.path() / "corpus";
  rc.n_permutations = 10;
  rc.extraction.sampled_layers = {2, 6, 10};
  rc.extraction.reference_layer = 6;
  rc.seed = 3;
  RunConfig first = rc, second = rc;
  first.out_dir = dir.path() / "run1";
  second.out_dir = dir.path() / "run2";
  run_pipeline(first);
  run_pipeline(second);
  const std::string a = read_file(first.out_dir / "report.json");
  const std::string b = read_file(second.out_dir / "report.json");
  return {a == b, fmt::format("report.json {} bytes, sha256 {} vs {}", a.size(), sha256_hex(a).substr(0, 16),
                              sha256_hex(b).substr(0, 16))};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"planted-layer recovery", planted_layer_recovery},
      {"null-signal control", null_signal_control},
      {"selectivity identity", selectivity_identity},
      {"Cramer's V cross-checks", cramers_v_cross_checks},
      {"statistical oracle equivalence", statistical_oracles},
      {"optimizer correctness", optimizer_correctness},
      {"extraction equivalence", extraction_equivalence},
      {"annotation golden fixture", golden_fixture},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    fmt::print("{} {}: {} [{:.1f}s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail, seconds_since(t0));
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures), criteria.size());
  return failures == 0 ? 0 : 1;
}
