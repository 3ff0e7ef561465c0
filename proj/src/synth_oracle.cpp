#include "probekit/synth_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <set>

namespace probekit {

namespace {

constexpr std::string_view kFillerWords[] = {
    "the",    "study",   "of",       "writing",  "in",      "this",    "field",   "is",
    "often",  "shaped",  "by",       "several",  "ideas",   "and",     "methods", "that",
    "remain", "open",    "to",       "further",  "review",  "across",  "work",    "with",
    "clear",  "results", "research", "practice", "program", "project", "group",   "topic",
};

// Tiny UD sentence bank used to tile token records onto synthetic examples.
struct BankToken {
  const char* surface;
  const char* lemma;
  const char* upos;
  int head;  // sentence-local, -1 for root
  const char* deprel;
  const char* feats;  // "Key=Value|Key=Value" or ""
};

const std::vector<std::vector<BankToken>>& sentence_bank() {
  static const std::vector<std::vector<BankToken>> bank = {
      {{"The", "the", "DET", 2, "det", ""},
       {"new", "new", "ADJ", 2, "amod", ""},
       {"method", "method", "NOUN", 3, "nsubj", ""},
       {"shows", "show", "VERB", -1, "root", ""},
       {"clear", "clear", "ADJ", 5, "amod", ""},
       {"gains", "gain", "NOUN", 3, "obj", ""},
       {".", ".", "PUNCT", 3, "punct", ""}},
      {{"Results", "result", "NOUN", 2, "nsubj:pass", ""},
       {"were", "be", "AUX", 2, "aux:pass", ""},
       {"examined", "examine", "VERB", -1, "root", "Voice=Pass|VerbForm=Part"},
       {"carefully", "carefully", "ADV", 2, "advmod", ""},
       {".", ".", "PUNCT", 2, "punct", ""}},
      {{"This", "this", "PRON", 3, "nsubj", ""},
       {"may", "may", "AUX", 3, "aux", ""},
       {"be", "be", "AUX", 3, "cop", ""},
       {"culture", "culture", "NOUN", -1, "root", ""},
       {"of", "of", "ADP", 5, "case", ""},
       {"globalization", "globalization", "NOUN", 3, "nmod", ""},
       {".", ".", "PUNCT", 3, "punct", ""}},
      {{"Students", "student", "NOUN", 1, "nsubj", ""},
       {"learn", "learn", "VERB", -1, "root", ""},
       {"theory", "theory", "NOUN", 1, "obj", ""},
       {"in", "in", "ADP", 4, "case", ""},
       {"class", "class", "NOUN", 1, "obl", ""},
       {".", ".", "PUNCT", 1, "punct", ""}},
      {{"Perhaps", "perhaps", "ADV", 2, "advmod", ""},
       {"it", "it", "PRON", 2, "nsubj", ""},
       {"works", "work", "VERB", -1, "root", ""},
       {".", ".", "PUNCT", 2, "punct", ""}},
  };
  return bank;
}

std::map<std::string, std::string> parse_feats(std::string_view feats) {
  std::map<std::string, std::string> out;
  if (feats.empty()) return out;
  for (const auto& kv : split(feats, '|')) {
    const auto eq = kv.find('=');
    if (eq != std::string::npos) out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

std::vector<TokenRecord> tile_tokens(const std::string& example_id, std::size_t n_tokens, std::size_t offset) {
  const auto& bank = sentence_bank();
  std::vector<TokenRecord> out;
  int sent = 0;
  std::size_t next = offset;
  while (out.size() < n_tokens) {
    const auto& sentence = bank[next++ % bank.size()];
    const int base = static_cast<int>(out.size());
    if (out.size() + sentence.size() > n_tokens) {
      // One-token sentences fill the tail so every generated token has a record.
      TokenRecord t{example_id, sent++, base, "Yes", "yes", "INTJ", -1, "root", {}};
      out.push_back(std::move(t));
      continue;
    }
    for (std::size_t k = 0; k < sentence.size(); ++k) {
      const auto& b = sentence[k];
      out.push_back({example_id, sent, base + static_cast<int>(k), b.surface, b.lemma, b.upos,
                     b.head < 0 ? -1 : base + b.head, b.deprel, parse_feats(b.feats)});
    }
    ++sent;
  }
  return out;
}

std::vector<std::size_t> family_counts(std::size_t n, const std::array<double, 3>& weights) {
  const double total = weights[0] + weights[1] + weights[2];
  std::array<double, 3> exact{};
  std::vector<std::size_t> counts(3);
  std::size_t assigned = 0;
  for (std::size_t f = 0; f < 3; ++f) {
    exact[f] = static_cast<double>(n) * weights[f] / total;
    counts[f] = static_cast<std::size_t>(std::floor(exact[f]));
    assigned += counts[f];
  }
  std::vector<std::size_t> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return exact[a] - std::floor(exact[a]) > exact[b] - std::floor(exact[b]);
  });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_examples < 1 || n_layers < 1 || hidden_dim < 1) throw ConfigError("synth: empty dimensions");
  if (min_tokens < 1 || max_tokens < min_tokens) throw ConfigError("synth: invalid token range");
  if (!(class_balance > 0.0 && class_balance < 1.0)) throw ConfigError("synth: class_balance must be in (0, 1)");
  if (strength_profile.size() != n_layers) {
    throw ConfigError("synth: strength profile has " + std::to_string(strength_profile.size()) +
                      " entries for " + std::to_string(n_layers) + " layers");
  }
  for (double s : strength_profile) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("synth: strengths must be finite and >= 0");
  }
  if (!(token_sparsity > 0.0 && token_sparsity <= 1.0)) throw ConfigError("synth: token_sparsity must be in (0, 1]");
  if (token_sparsity * static_cast<double>(min_tokens) < 1.0) {
    throw ConfigError("synth: token_sparsity * min_tokens < 1 leaves short examples without planted rows");
  }
  if (!(noise_sd > 0.0)) throw ConfigError("synth: noise_sd must be positive");
  for (double w : family_weights) {
    if (!(w >= 0.0)) throw ConfigError("synth: family weights must be >= 0");
  }
  if (family_weights[0] + family_weights[1] + family_weights[2] <= 0.0) {
    throw ConfigError("synth: family weights sum to zero");
  }
}

SynthConfig SynthConfig::planted_at(std::size_t layer, double strength, std::size_t n_layers) {
  SynthConfig c;
  c.n_layers = n_layers;
  c.strength_profile.assign(n_layers, 0.0);
  c.strength_profile.at(layer) = strength;
  return c;
}

std::vector<Eigen::VectorXd> plant_directions(std::uint64_t signal_direction_seed, std::size_t n_layers,
                                              std::size_t hidden_dim) {
  std::vector<Eigen::VectorXd> out;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Rng rng(derive_seed(signal_direction_seed, l));
    Eigen::VectorXd v(static_cast<Eigen::Index>(hidden_dim));
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = rng.normal();
    out.push_back(v / v.norm());
  }
  return out;
}

SynthCorpus generate(const SynthConfig& config) {
  config.validate();
  const auto counts = family_counts(config.n_examples, config.family_weights);

  SynthCorpus out;
  out.plant.directions = plant_directions(config.signal_direction_seed, config.n_layers, config.hidden_dim);
  out.plant.strengths = config.strength_profile;

  std::vector<ExampleMeta> meta;
  std::size_t index = 0;
  std::size_t template_base = 0;
  for (std::size_t f = 0; f < 3; ++f) {
    const TemplateFamily family = kAllFamilies[f];
    for (std::size_t j = 0; j < counts[f]; ++j, ++index) {
      ExampleMeta m;
      m.example_id = fmt::format("ex{:04d}", index);
      const double b = config.class_balance;
      m.nationality = std::floor(static_cast<double>(j + 1) * b) > std::floor(static_cast<double>(j) * b)
                          ? Nationality::kA
                          : Nationality::kB;
      switch ((j / 2) % 3) {
        case 0: m.medium = Medium::kEMI; m.role = Role::kPostdoc; break;
        case 1: m.medium = Medium::kCMI; m.role = Role::kPostdoc; break;
        default: m.medium = Medium::kNone; m.role = Role::kStudent; break;
      }
      m.cohort = derive_cohort(m.nationality, m.medium, m.role);
      m.template_family = family;
      m.template_id = fmt::format("{}_t{:02d}", to_lower_ascii(to_string(family)), template_base + j / 6);
      meta.push_back(std::move(m));
    }
    template_base += (counts[f] + 5) / 6;
  }

  std::vector<ExampleActivations> acts(meta.size());
  std::vector<std::vector<int>> planted(meta.size());
  const std::uint64_t length_stream = derive_seed(config.seed, 1);
  const std::uint64_t noise_stream = derive_seed(config.seed, 2);
  const std::uint64_t plant_stream = derive_seed(config.seed, 3);
  const std::uint64_t text_stream = derive_seed(config.seed, 4);
  for (std::size_t i = 0; i < meta.size(); ++i) {
    Rng length_rng(derive_seed(length_stream, i));
    meta[i].n_generated_tokens =
        config.min_tokens + length_rng.below(config.max_tokens - config.min_tokens + 1);
    Rng text_rng(derive_seed(text_stream, i));
    std::string text;
    for (int w = 0; w < 40; ++w) {
      if (w) text += ' ';
      text += kFillerWords[text_rng.below(std::size(kFillerWords))];
    }
    meta[i].text = text + ".";
  }

  parallel_for(meta.size(), [&](std::size_t i) {
    const ExampleMeta& m = meta[i];
    const std::size_t n_tok = m.n_generated_tokens;
    const std::size_t n_plant = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.token_sparsity * static_cast<double>(n_tok))));
    std::vector<int> rows(n_tok);
    for (std::size_t t = 0; t < n_tok; ++t) rows[t] = static_cast<int>(t);
    Rng plant_rng(derive_seed(plant_stream, i));
    plant_rng.shuffle(rows);
    rows.resize(std::min(n_plant, n_tok));
    std::sort(rows.begin(), rows.end());
    planted[i] = rows;

    const double sign = m.nationality == Nationality::kB ? 1.0 : -1.0;
    const auto fam = config.family_specific_strength.find(m.template_family);
    const double multiplier = fam == config.family_specific_strength.end() ? 1.0 : fam->second;
    Rng noise(derive_seed(noise_stream, i));
    ExampleActivations a;
    a.n_tokens = n_tok;
    a.values.resize(config.n_layers * n_tok * config.hidden_dim);
    for (std::size_t l = 0; l < config.n_layers; ++l) {
      const double offset = sign * 0.5 * config.strength_profile[l] * multiplier;
      const Eigen::VectorXd& dir = out.plant.directions[l];
      std::size_t next_plant = 0;
      for (std::size_t t = 0; t < n_tok; ++t) {
        const bool plant_row = next_plant < rows.size() && rows[next_plant] == static_cast<int>(t);
        if (plant_row) ++next_plant;
        float* row = a.values.data() + (l * n_tok + t) * config.hidden_dim;
        for (std::size_t j = 0; j < config.hidden_dim; ++j) {
          double v = config.noise_sd * noise.normal();
          if (plant_row) v += offset * dir[static_cast<Eigen::Index>(j)];
          row[j] = static_cast<float>(v);
        }
      }
    }
    acts[i] = std::move(a);
  });

  out.corpus.store = ActivationStore(config.n_layers, config.hidden_dim);
  for (std::size_t i = 0; i < meta.size(); ++i) {
    out.corpus.store.add(meta[i].example_id, std::move(acts[i]));
    out.plant.examples[meta[i].example_id] = {meta[i].nationality, meta[i].template_family, planted[i]};
    if (config.with_tokens) {
      auto tokens = tile_tokens(meta[i].example_id, meta[i].n_generated_tokens, i);
      std::move(tokens.begin(), tokens.end(), std::back_inserter(out.tokens));
    }
  }
  out.corpus.meta = std::move(meta);
  return out;
}

SelectionScore score_selection(std::span<const TokenSelection> selections, const PlantRecord& plant, int layer,
                               std::uint64_t baseline_seed) {
  if (layer < 0 || static_cast<std::size_t>(layer) >= plant.strengths.size()) {
    throw std::out_of_range("layer " + std::to_string(layer) + " is not part of the plant");
  }
  SelectionScore s;
  std::map<std::string, std::size_t> per_example;
  for (const auto& sel : selections) {
    if (sel.layer != layer) continue;
    const auto it = plant.examples.find(sel.example_id);
    if (it == plant.examples.end()) throw std::out_of_range("unknown example " + sel.example_id);
    ++s.n_selected;
    ++per_example[sel.example_id];
    const auto& idx = it->second.planted_indices;
    if (std::binary_search(idx.begin(), idx.end(), sel.token_index)) ++s.hits;
  }
  for (const auto& [id, ex] : plant.examples) s.n_planted += ex.planted_indices.size();
  if (s.n_selected > 0) s.precision = static_cast<double>(s.hits) / static_cast<double>(s.n_selected);
  s.recall = s.n_planted ? static_cast<double>(s.hits) / static_cast<double>(s.n_planted) : 0.0;

  // Random baseline: for each example, the same number of positions drawn
  // without replacement from all positions seen in the plant record.
  std::size_t baseline_hits = 0;
  std::size_t k = 0;
  for (const auto& [id, count] : per_example) {
    const auto& ex = plant.examples.at(id);
    // The example's length is not in the plant; bound positions by the largest
    // index ever selected or planted there.
    int n_positions = ex.planted_indices.empty() ? 0 : ex.planted_indices.back() + 1;
    for (const auto& sel : selections) {
      if (sel.example_id == id) n_positions = std::max(n_positions, sel.token_index + 1);
    }
    std::vector<int> positions(static_cast<std::size_t>(n_positions));
    for (int t = 0; t < n_positions; ++t) positions[static_cast<std::size_t>(t)] = t;
    Rng rng(derive_seed(baseline_seed, k++));
    rng.shuffle(positions);
    positions.resize(std::min(count, positions.size()));
    for (int p : positions) {
      if (std::binary_search(ex.planted_indices.begin(), ex.planted_indices.end(), p)) ++baseline_hits;
    }
  }
  if (s.n_selected > 0) {
    s.baseline_hit_rate = static_cast<double>(baseline_hits) / static_cast<double>(s.n_selected);
    if (s.baseline_hit_rate > 0.0) s.lift = *s.precision / s.baseline_hit_rate;
  }
  return s;
}


void save_synth(const SynthCorpus& synth, const SynthConfig& config, const std::filesystem::path& dir) {
  save_corpus(synth.corpus, dir);
  if (config.with_tokens) {
    write_tokens_jsonl(dir / "tokens.jsonl", synth.tokens);
  } else {
    std::filesystem::remove(dir / "tokens.jsonl");
  }
  write_file(dir / "plant.json", nlohmann::json(synth.plant).dump() + "\n");
  write_file(dir / "synth_config.json", nlohmann::json(config).dump(2) + "\n");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  nlohmann::json family_strength = nlohmann::json::object();
  for (const auto& [f, v] : c.family_specific_strength) family_strength[std::string(to_string(f))] = v;
  j = {{"n_examples", c.n_examples},
       {"n_layers", c.n_layers},
       {"hidden_dim", c.hidden_dim},
       {"min_tokens", c.min_tokens},
       {"max_tokens", c.max_tokens},
       {"class_balance", c.class_balance},
       {"signal_direction_seed", c.signal_direction_seed},
       {"strength_profile", c.strength_profile},
       {"token_sparsity", c.token_sparsity},
       {"noise_sd", c.noise_sd},
       {"family_weights", c.family_weights},
       {"family_specific_strength", family_strength},
       {"seed", c.seed},
       {"with_tokens", c.with_tokens}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  static const std::set<std::string> kKeys = {
      "n_examples", "n_layers",        "hidden_dim", "min_tokens",     "max_tokens",
      "class_balance", "signal_direction_seed", "strength_profile", "token_sparsity", "noise_sd",
      "family_weights", "family_specific_strength", "seed", "with_tokens", "planted_layer", "strength"};
  if (!j.is_object()) throw ConfigError("synth config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!kKeys.count(k)) throw ConfigError("unknown synth config key: " + k);
  }
  try {
    c.n_examples = j.value("n_examples", c.n_examples);
    c.n_layers = j.value("n_layers", c.n_layers);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.min_tokens = j.value("min_tokens", c.min_tokens);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.class_balance = j.value("class_balance", c.class_balance);
    c.signal_direction_seed = j.value("signal_direction_seed", c.signal_direction_seed);
    c.token_sparsity = j.value("token_sparsity", c.token_sparsity);
    c.noise_sd = j.value("noise_sd", c.noise_sd);
    c.family_weights = j.value("family_weights", c.family_weights);
    c.seed = j.value("seed", c.seed);
    c.with_tokens = j.value("with_tokens", c.with_tokens);
    if (j.contains("family_specific_strength")) {
      c.family_specific_strength.clear();
      for (const auto& [k, v] : j["family_specific_strength"].items()) {
        c.family_specific_strength[parse_template_family(k)] = v.get<double>();
      }
    }
    if (j.contains("strength_profile")) {
      c.strength_profile = j["strength_profile"].get<std::vector<double>>();
    } else if (j.contains("planted_layer")) {
      c.strength_profile.assign(c.n_layers, 0.0);
      const auto layer = j["planted_layer"].get<std::size_t>();
      if (layer >= c.n_layers) throw ConfigError("planted_layer outside the layer range");
      c.strength_profile[layer] = j.value("strength", 1.0);
    } else if (c.strength_profile.size() != c.n_layers) {
      c.strength_profile.assign(c.n_layers, 0.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  } catch (const DataError& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const PlantRecord& p) {
  nlohmann::json examples = nlohmann::json::object();
  for (const auto& [id, ex] : p.examples) {
    examples[id] = {{"nationality", to_string(ex.nationality)},
                    {"family", to_string(ex.family)},
                    {"planted_indices", ex.planted_indices}};
  }
  nlohmann::json directions = nlohmann::json::array();
  for (const auto& d : p.directions) directions.push_back(std::vector<double>(d.data(), d.data() + d.size()));
  j = {{"examples", examples}, {"directions", directions}, {"strengths", p.strengths}};
}

void from_json(const nlohmann::json& j, PlantRecord& p) {
  p.examples.clear();
  for (const auto& [id, ex] : j.at("examples").items()) {
    p.examples[id] = {parse_nationality(ex.at("nationality").get<std::string>()),
                      parse_template_family(ex.at("family").get<std::string>()),
                      ex.at("planted_indices").get<std::vector<int>>()};
  }
  p.directions.clear();
  for (const auto& d : j.at("directions")) {
    const auto v = d.get<std::vector<double>>();
    p.directions.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  p.strengths = j.at("strengths").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const SelectionScore& s) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j = {{"n_selected", s.n_selected},
       {"n_planted", s.n_planted},
       {"hits", s.hits},
       {"precision", opt(s.precision)},
       {"recall", s.recall},
       {"baseline_hit_rate", s.baseline_hit_rate},
       {"lift", opt(s.lift)}};
}

}  // namespace probekit
