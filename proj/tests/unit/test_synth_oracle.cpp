#include <doctest.h>

#include <cmath>
#include <set>

#include "probekit/synth_oracle.hpp"
#include "test_support.hpp"

using namespace probekit;
using probekit::testing::TempDir;

namespace {

SynthConfig tiny(double strength = 2.0) {
  SynthConfig c = SynthConfig::planted_at(1, strength, 4);
  c.n_examples = 30;
  c.hidden_dim = 6;
  c.min_tokens = 20;
  c.max_tokens = 30;
  c.seed = 4;
  return c;
}

}  // namespace

TEST_CASE("generation is deterministic in the configuration") {
  const auto a = generate(tiny());
  const auto b = generate(tiny());
  for (const auto& m : a.corpus.meta) {
    CHECK(a.corpus.store.example(m.example_id).values == b.corpus.store.example(m.example_id).values);
    CHECK(a.plant.examples.at(m.example_id).planted_indices == b.plant.examples.at(m.example_id).planted_indices);
  }
  auto other = tiny();
  other.seed = 5;
  const auto c = generate(other);
  CHECK(c.corpus.store.example("ex0000").values != a.corpus.store.example("ex0000").values);
}

TEST_CASE("metadata follows the documented design") {
  auto config = tiny();
  config.family_weights = {2.0, 1.0, 1.0};
  config.n_examples = 31;
  const auto s = generate(config);
  std::map<TemplateFamily, int> per_family;
  std::map<TemplateFamily, int> a_per_family;
  for (const auto& m : s.corpus.meta) {
    ++per_family[m.template_family];
    a_per_family[m.template_family] += m.nationality == Nationality::kA;
    CHECK(m.cohort == derive_cohort(m.nationality, m.medium, m.role));
    CHECK((m.medium == Medium::kNone) == (m.role == Role::kStudent));
    CHECK(m.n_generated_tokens >= 20);
    CHECK(m.n_generated_tokens <= 30);
    CHECK(s.corpus.store.n_tokens(m.example_id) == m.n_generated_tokens);
    CHECK_FALSE(m.text.empty());
  }
  // Quotas 15.5, 7.75, 7.75 -> 15, 8, 8 by largest remainder (ties to the earlier family).
  CHECK(per_family[TemplateFamily::kBase] == 15);
  CHECK(per_family[TemplateFamily::kAlt] + per_family[TemplateFamily::kTheory] == 16);
  for (const auto& [f, n] : per_family) {
    int expected_a = 0;
    for (int j = 0; j < n; ++j) expected_a += std::floor((j + 1) * 0.5) > std::floor(j * 0.5);
    CHECK(a_per_family[f] == expected_a);
  }
}

TEST_CASE("directions are unit vectors reproducible from their seed") {
  const auto d = plant_directions(17, 5, 8);
  REQUIRE(d.size() == 5);
  for (const auto& v : d) CHECK(v.norm() == doctest::Approx(1.0));
  CHECK((plant_directions(17, 5, 8)[3] - d[3]).norm() == 0.0);
  CHECK((plant_directions(18, 5, 8)[3] - d[3]).norm() > 0.0);
}

TEST_CASE("planted rows carry the class offset along the layer direction") {
  auto config = tiny(3.0);
  config.token_sparsity = 0.25;
  config.noise_sd = 0.5;
  const auto s = generate(config);
  const auto& dir = s.plant.directions[1];
  double planted_a = 0, planted_b = 0, other = 0;
  int na = 0, nb = 0, no = 0;
  for (const auto& m : s.corpus.meta) {
    const auto& ex = s.plant.examples.at(m.example_id);
    const auto expected_count = std::max<long>(1, std::lround(0.25 * static_cast<double>(m.n_generated_tokens)));
    CHECK(static_cast<long>(ex.planted_indices.size()) == expected_count);
    CHECK(std::is_sorted(ex.planted_indices.begin(), ex.planted_indices.end()));
    const std::set<int> planted(ex.planted_indices.begin(), ex.planted_indices.end());
    const auto layer = s.corpus.store.layer(m.example_id, 1);
    for (int t = 0; t < layer.rows(); ++t) {
      const double proj = layer.row(t).cast<double>().dot(dir.transpose());
      if (!planted.count(t)) {
        other += proj;
        ++no;
      } else if (m.nationality == Nationality::kA) {
        planted_a += proj;
        ++na;
      } else {
        planted_b += proj;
        ++nb;
      }
    }
  }
  CHECK(planted_b / nb - planted_a / na == doctest::Approx(3.0).epsilon(0.1));
  CHECK(std::abs(other / no) < 0.1);
}

TEST_CASE("validation rejects impossible configurations") {
  auto c = tiny();
  c.token_sparsity = 0.01;  // 0.01 * 20 < 1
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny();
  c.strength_profile.pop_back();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny();
  c.min_tokens = 40;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny();
  c.noise_sd = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("configuration JSON round-trips and supports the planted-layer shortcut") {
  auto c = tiny();
  c.family_specific_strength[TemplateFamily::kAlt] = 0.5;
  const nlohmann::json j = c;
  const auto back = j.get<SynthConfig>();
  CHECK(back.strength_profile == c.strength_profile);
  CHECK(back.family_specific_strength.at(TemplateFamily::kAlt) == 0.5);
  CHECK(back.seed == c.seed);
  const auto shortcut = nlohmann::json{{"n_layers", 6}, {"planted_layer", 2}, {"strength", 1.5}}.get<SynthConfig>();
  CHECK(shortcut.strength_profile == std::vector<double>{0, 0, 1.5, 0, 0, 0});
  CHECK_THROWS_AS((nlohmann::json{{"n_layer", 6}}.get<SynthConfig>()), ConfigError);
}

TEST_CASE("selection scoring counts hits against the plant") {
  auto config = tiny();
  config.token_sparsity = 0.2;
  const auto s = generate(config);
  std::vector<TokenSelection> perfect;
  for (const auto& [id, ex] : s.plant.examples)
    for (int i : ex.planted_indices) perfect.push_back({id, 1, i, 1.0});
  const auto score = score_selection(perfect, s.plant, 1, 3);
  CHECK(score.hits == perfect.size());
  CHECK(*score.precision == 1.0);
  CHECK(score.recall == 1.0);
  CHECK(score.baseline_hit_rate < 0.5);
  CHECK(*score.lift > 2.0);
  const auto empty = score_selection({}, s.plant, 1, 3);
  CHECK_FALSE(empty.precision.has_value());
  CHECK(empty.recall == 0.0);
  CHECK_THROWS_AS(score_selection(perfect, s.plant, 9, 3), std::out_of_range);
  std::vector<TokenSelection> unknown{{"nope", 1, 0, 1.0}};
  CHECK_THROWS_AS(score_selection(unknown, s.plant, 1, 3), std::out_of_range);
}

TEST_CASE("synthetic tokens line up with the activation rows") {
  auto config = tiny();
  config.with_tokens = true;
  const auto s = generate(config);
  std::map<std::string, int> count;
  for (const auto& t : s.tokens) {
    ++count[t.example_id];
    CHECK(t.head < static_cast<int>(s.corpus.find(t.example_id).n_generated_tokens));
  }
  for (const auto& m : s.corpus.meta) CHECK(count[m.example_id] == static_cast<int>(m.n_generated_tokens));
}

TEST_CASE("save_synth writes a loadable corpus and drops stale tokens") {
  TempDir dir("synth");
  auto config = tiny();
  config.with_tokens = true;
  save_synth(generate(config), config, dir.path());
  CHECK(std::filesystem::exists(dir.path() / "tokens.jsonl"));
  CHECK(std::filesystem::exists(dir.path() / "plant.json"));
  const auto corpus = load_corpus(dir.path());
  CHECK(corpus.meta.size() == 30);
  const auto plant = nlohmann::json::parse(read_file(dir.path() / "plant.json")).get<PlantRecord>();
  CHECK(plant.examples.size() == 30);
  CHECK(plant.strengths[1] == 2.0);
  config.with_tokens = false;
  save_synth(generate(config), config, dir.path());
  CHECK_FALSE(std::filesystem::exists(dir.path() / "tokens.jsonl"));
}
