#include "probekit/control_suite.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace probekit {

std::vector<int> permuted_labels(std::span<const int> y, std::uint64_t seed, std::size_t perm) {
  std::vector<int> out(y.begin(), y.end());
  Rng rng(derive_seed(seed, perm));
  rng.shuffle(out);
  return out;
}

ShuffleBaseline shuffled_baseline(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                                  const ProbeConfig& config, std::size_t n_perms, std::uint64_t seed,
                                  const PermutationFn& permute) {
  if (n_perms < 1) throw ConfigError("shuffled baseline needs at least one permutation");
  ShuffleBaseline out;
  out.n_permutations = n_perms;
  out.seed = seed;
  out.per_perm_acc.resize(n_perms);
  parallel_for(n_perms, [&](std::size_t p) {
    const std::vector<int> y_perm = permute ? permute(y, p) : permuted_labels(y, seed, p);
    if (y_perm.size() != y.size()) throw std::invalid_argument("permutation changed the label count");
    out.per_perm_acc[p] = cross_validate(X, y_perm, n_classes, config).mean_acc;
  });
  double sum = 0.0;
  for (double a : out.per_perm_acc) sum += a;
  out.mean_shuffled_acc = sum / static_cast<double>(n_perms);
  return out;
}

// --- TF-IDF -------------------------------------------------------------------------

std::vector<std::string> tfidf_tokenize(std::string_view text, std::size_t min_token_length) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= min_token_length) tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> TfidfVectorizer::terms(std::string_view text) const {
  const auto tokens = tfidf_tokenize(text, config_.min_token_length);
  std::vector<std::string> out;
  for (int n = config_.ngram_min; n <= config_.ngram_max; ++n) {
    const auto un = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
      std::string term = tokens[i];
      for (std::size_t k = 1; k < un; ++k) term += " " + tokens[i + k];
      out.push_back(std::move(term));
    }
  }
  return out;
}

TfidfVectorizer TfidfVectorizer::fit(std::span<const std::string> texts, const TfidfConfig& config) {
  if (texts.empty()) throw std::invalid_argument("tfidf: no texts");
  if (config.ngram_min < 1 || config.ngram_max < config.ngram_min) {
    throw ConfigError("tfidf: invalid n-gram range");
  }
  TfidfVectorizer v;
  v.config_ = config;
  std::map<std::string, std::size_t> df;
  for (const auto& text : texts) {
    auto terms = v.terms(text);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    for (auto& t : terms) ++df[t];
  }
  if (df.empty()) throw std::invalid_argument("tfidf: empty vocabulary after filtering");
  const double n = static_cast<double>(texts.size());
  int column = 0;
  for (const auto& [term, count] : df) {
    v.vocabulary_[term] = column++;
    v.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return v;
}

SparseRowMatrix TfidfVectorizer::transform(std::span<const std::string> texts) const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t row = 0; row < texts.size(); ++row) {
    std::map<int, double> counts;
    for (const auto& term : terms(texts[row])) {
      const auto it = vocabulary_.find(term);
      if (it != vocabulary_.end()) counts[it->second] += 1.0;
    }
    double norm2 = 0.0;
    for (auto& [col, value] : counts) {
      value *= idf_[static_cast<std::size_t>(col)];
      norm2 += value * value;
    }
    const double norm = std::sqrt(norm2);
    for (const auto& [col, value] : counts) {
      triplets.emplace_back(static_cast<int>(row), col, value / norm);
    }
  }
  SparseRowMatrix m(static_cast<Eigen::Index>(texts.size()),
                    static_cast<Eigen::Index>(vocabulary_.size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

// --- skyline ---------------------------------------------------------------------------

namespace {

double fit_and_score(std::span<const std::string> train_texts, std::span<const int> y_train,
                     std::span<const std::string> eval_texts, std::span<const int> y_eval,
                     const std::vector<std::string>& class_order, const ProbeConfig& config,
                     const TfidfConfig& tfidf) {
  const auto vectorizer = TfidfVectorizer::fit(train_texts, tfidf);
  const ProbeModel model = train_probe(vectorizer.transform(train_texts), y_train, class_order, config);
  return accuracy(model, vectorizer.transform(eval_texts), y_eval);
}

}  // namespace

SkylineResult skyline(std::span<const std::string> train_texts, std::span<const int> y_train,
                      std::span<const std::string> test_texts, std::span<const int> y_test,
                      int n_classes, const ProbeConfig& config, const TfidfConfig& tfidf) {
  config.validate();
  if (train_texts.size() != y_train.size() || test_texts.size() != y_test.size()) {
    throw std::invalid_argument("skyline: texts and labels are misaligned");
  }
  std::vector<std::string> class_order(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) class_order[static_cast<std::size_t>(c)] = std::to_string(c);

  SkylineResult out;
  out.n_train = train_texts.size();
  out.n_test = test_texts.size();
  out.folds = stratified_folds(y_train, n_classes, config.k_folds, config.seed);
  std::vector<double> per_fold(static_cast<std::size_t>(config.k_folds));
  parallel_for(per_fold.size(), [&](std::size_t f) {
    std::vector<std::string> tr_text, va_text;
    std::vector<int> tr_y, va_y;
    for (std::size_t i = 0; i < out.folds.size(); ++i) {
      const bool val = out.folds[i] == static_cast<int>(f);
      (val ? va_text : tr_text).push_back(train_texts[i]);
      (val ? va_y : tr_y).push_back(y_train[i]);
    }
    per_fold[f] = fit_and_score(tr_text, tr_y, va_text, va_y, class_order, config, tfidf);
  });
  out.cv = CVResult::from_folds(std::move(per_fold));
  out.holdout_acc = test_texts.empty()
                        ? 0.0
                        : fit_and_score(train_texts, y_train, test_texts, y_test, class_order, config, tfidf);
  return out;
}

SkylineResult skyline(std::span<const ExampleMeta> meta, Target target, const Split& split,
                      const ProbeConfig& config, const TfidfConfig& tfidf) {
  std::map<std::string, const ExampleMeta*> by_id;
  for (const auto& m : meta) by_id[m.example_id] = &m;
  const LabeledIds train = labels_for(meta, target, split.train_ids);
  const LabeledIds test = labels_for(meta, target, split.test_ids);
  auto texts_of = [&](const LabeledIds& l) {
    std::vector<std::string> out;
    for (const auto& id : l.ids) out.push_back(by_id.at(id)->text);
    return out;
  };
  return skyline(texts_of(train), train.y, texts_of(test), test.y,
                 static_cast<int>(train.class_order.size()), config, tfidf);
}

// --- transfer ---------------------------------------------------------------------------

TransferResult cross_family_transfer(const ActivationStore& store, std::span<const ExampleMeta> meta,
                                     int layer, const ProbeConfig& config, Target target) {
  std::map<TemplateFamily, std::vector<std::string>> ids_by_family;
  for (const auto& m : meta) {
    if (label_of(m, target)) ids_by_family[m.template_family].push_back(m.example_id);
  }
  for (auto family : kAllFamilies) {
    const auto& ids = ids_by_family[family];
    const LabeledIds labeled = labels_for(meta, target, ids);
    std::vector<std::size_t> counts(labeled.class_order.size(), 0);
    for (int v : labeled.y) ++counts[static_cast<std::size_t>(v)];
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] < 2) {
        throw std::invalid_argument("transfer: family " + std::string(to_string(family)) + " has " +
                                    std::to_string(counts[c]) + " examples of class " +
                                    labeled.class_order[c]);
      }
      if (counts[c] != counts[0]) {
        throw std::invalid_argument("transfer: family " + std::string(to_string(family)) +
                                    " is not class-balanced");
      }
    }
  }

  static constexpr std::pair<TemplateFamily, TemplateFamily> kPairs[] = {
      {TemplateFamily::kBase, TemplateFamily::kAlt},   {TemplateFamily::kBase, TemplateFamily::kTheory},
      {TemplateFamily::kAlt, TemplateFamily::kBase},   {TemplateFamily::kAlt, TemplateFamily::kTheory},
      {TemplateFamily::kTheory, TemplateFamily::kAlt}, {TemplateFamily::kTheory, TemplateFamily::kBase},
  };
  TransferResult out;
  out.layer = layer;
  out.target = target;
  out.pairs.resize(std::size(kPairs));
  parallel_for(out.pairs.size(), [&](std::size_t p) {
    const auto [train_family, test_family] = kPairs[p];
    const auto& train_ids = ids_by_family.at(train_family);
    const auto& test_ids = ids_by_family.at(test_family);
    const std::set<std::string> train_set(train_ids.begin(), train_ids.end());
    for (const auto& id : test_ids) {
      if (train_set.count(id)) throw LeakageError("transfer: example " + id + " is in both families");
    }
    const ProbeModel model = train_centroid_probe(store, meta, target, train_ids, layer, config);
    const LabeledIds test = labels_for(meta, target, test_ids);
    const Eigen::MatrixXd X = centroid_matrix(store, test.ids, static_cast<std::size_t>(layer));
    out.pairs[p] = {train_family, test_family, accuracy(model, X, test.y), train_ids.size(),
                    test.ids.size()};
  });
  return out;
}

void to_json(nlohmann::json& j, const ShuffleBaseline& s) {
  j = {{"n_permutations", s.n_permutations},
       {"per_perm_acc", s.per_perm_acc},
       {"mean_shuffled_acc", s.mean_shuffled_acc},
       {"seed", s.seed}};
}

void to_json(nlohmann::json& j, const SkylineResult& s) {
  j = {{"cv", s.cv}, {"holdout_acc", s.holdout_acc}, {"n_train", s.n_train}, {"n_test", s.n_test}};
}

void to_json(nlohmann::json& j, const TransferResult& t) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : t.pairs) {
    pairs.push_back({{"train_family", to_string(p.train_family)},
                     {"test_family", to_string(p.test_family)},
                     {"accuracy", p.accuracy},
                     {"n_train", p.n_train},
                     {"n_test", p.n_test}});
  }
  j = {{"layer", t.layer}, {"target", to_string(t.target)}, {"pairs", pairs}};
}

}  // namespace probekit
