#include "probekit/probe_engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace probekit {

namespace {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

template <class Matrix>
double objective_impl(const Matrix& X, std::span<const int> y, int n_classes, double C,
                      const Eigen::VectorXd& params, Eigen::VectorXd* grad) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  if (n_classes == 2) {
    const auto w = params.head(d);
    const double b = params[d];
    Eigen::VectorXd z = X * w;
    double loss = 0.0;
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sign = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
      const double margin = sign * (z[i] + b);
      loss += softplus(-margin);
      r[i] = -sign * sigmoid(-margin);
    }
    if (grad) {
      grad->resize(d + 1);
      grad->head(d) = (w + C * (X.transpose() * r)) * inv_n;
      (*grad)[d] = C * r.sum() * inv_n;
    }
    return (0.5 * w.squaredNorm() + C * loss) * inv_n;
  }

  const Eigen::Index k = n_classes;
  Eigen::Map<const RowMatrixXd> W(params.data(), k, d);
  const auto b = params.segment(k * d, k);
  Eigen::MatrixXd Z = X * W.transpose();
  Z.rowwise() += b.transpose();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zmax = Z.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      Z(i, c) = std::exp(Z(i, c) - zmax);
      sum += Z(i, c);
    }
    const int yi = y[static_cast<std::size_t>(i)];
    // Z now holds unnormalised probabilities; -log p_y = log(sum) - log(Z_y).
    loss += std::log(sum) - std::log(Z(i, yi));
    Z.row(i) /= sum;
    Z(i, yi) -= 1.0;
  }
  if (grad) {
    grad->resize(k * d + k);
    Eigen::Map<RowMatrixXd> gW(grad->data(), k, d);
    gW = (W + C * (Z.transpose() * X)) * inv_n;
    grad->segment(k * d, k) = C * Z.colwise().sum().transpose() * inv_n;
  }
  return (0.5 * W.squaredNorm() + C * loss) * inv_n;
}

void check_training_inputs(Eigen::Index rows, std::span<const int> y,
                           const std::vector<std::string>& class_order) {
  if (static_cast<std::size_t>(rows) != y.size()) {
    throw std::invalid_argument("train_probe: X has " + std::to_string(rows) + " rows but y has " +
                                std::to_string(y.size()) + " labels");
  }
  if (class_order.size() < 2) throw std::invalid_argument("train_probe: need at least two classes");
  std::set<int> present;
  for (int v : y) {
    if (v < 0 || v >= static_cast<int>(class_order.size())) {
      throw std::invalid_argument("train_probe: label index out of range");
    }
    present.insert(v);
  }
  if (present.size() < 2) throw std::invalid_argument("train_probe: y contains a single class");
}

template <class Matrix>
ProbeModel fit_parameters(const Matrix& Xs, std::span<const int> y, std::vector<std::string> class_order,
                          const ProbeConfig& config, Standardizer standardizer) {
  const int k = static_cast<int>(class_order.size());
  const Eigen::Index d = Xs.cols();
  const Eigen::Index rows = k == 2 ? 1 : k;
  Eigen::VectorXd params = Eigen::VectorXd::Zero(rows * d + rows);
  const double C = config.inverse_reg_C;
  ObjectiveFn fn = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
    return objective_impl(Xs, y, k, C, p, &g);
  };
  LbfgsOptions opts;
  opts.max_iter = config.max_iter;
  opts.grad_tol = config.grad_tol;

  ProbeModel model;
  model.optimizer = minimize_lbfgs(fn, params, opts);
  model.standardizer = std::move(standardizer);
  model.weights = Eigen::Map<const RowMatrixXd>(params.data(), rows, d);
  model.bias = params.segment(rows * d, rows);
  model.class_order = std::move(class_order);
  model.config = config;
  return model;
}

}  // namespace

std::string_view to_string(Target t) {
  switch (t) {
    case Target::kNationality: return "nationality";
    case Target::kMedium: return "medium";
    case Target::kRole: return "role";
    case Target::kCohort6: return "cohort6";
  }
  return "nationality";
}

Target parse_target(std::string_view s) {
  for (auto t : {Target::kNationality, Target::kMedium, Target::kRole, Target::kCohort6}) {
    if (to_string(t) == s) return t;
  }
  throw ConfigError("unknown target: " + std::string(s));
}

void ProbeConfig::validate() const {
  if (!(inverse_reg_C > 0.0)) throw ConfigError("probe C must be positive");
  if (k_folds < 2) throw ConfigError("k_folds must be at least 2");
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (!(grad_tol > 0.0)) throw ConfigError("grad_tol must be positive");
}

// --- standardizer ----------------------------------------------------------------

Standardizer Standardizer::identity(Eigen::Index dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != dim()) throw std::invalid_argument("standardizer: dimension mismatch");
  return (X.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("standardizer: dimension mismatch");
  return (x - means).cwiseQuotient(scales);
}

Eigen::MatrixXd Standardizer::invert(const Eigen::MatrixXd& Z) const {
  return (Z.array().rowwise() * scales.transpose().array()).matrix().rowwise() + means.transpose();
}

Standardizer fit_standardizer(const Eigen::MatrixXd& X) {
  if (X.rows() < 1) throw std::invalid_argument("fit_standardizer: need at least one row");
  if (!X.allFinite()) throw std::invalid_argument("fit_standardizer: non-finite input");
  const double n = static_cast<double>(X.rows());
  Standardizer s;
  s.means = X.colwise().sum().transpose() / n;
  s.scales.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.means[j]).square().sum() / n;
    const double sd = std::sqrt(var);
    s.scales[j] = sd > 1e-12 * std::max(1.0, std::abs(s.means[j])) ? sd : 1.0;
  }
  return s;
}

// --- objective and training ----------------------------------------------------------

double probe_objective(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes, double C,
                       const Eigen::VectorXd& params, Eigen::VectorXd* grad) {
  return objective_impl(X, y, n_classes, C, params, grad);
}

double probe_objective(const SparseRowMatrix& X, std::span<const int> y, int n_classes, double C,
                       const Eigen::VectorXd& params, Eigen::VectorXd* grad) {
  return objective_impl(X, y, n_classes, C, params, grad);
}

Eigen::VectorXd pack_parameters(const ProbeModel& model) {
  const Eigen::Index rows = model.weights.rows();
  const Eigen::Index d = model.weights.cols();
  Eigen::VectorXd p(rows * d + rows);
  Eigen::Map<RowMatrixXd>(p.data(), rows, d) = model.weights;
  p.segment(rows * d, rows) = model.bias;
  return p;
}

ProbeModel train_probe(const Eigen::MatrixXd& X, std::span<const int> y,
                       std::vector<std::string> class_order, const ProbeConfig& config) {
  config.validate();
  check_training_inputs(X.rows(), y, class_order);
  Standardizer s = fit_standardizer(X);
  const Eigen::MatrixXd Xs = s.apply(X);
  return fit_parameters(Xs, y, std::move(class_order), config, std::move(s));
}

ProbeModel train_probe(const SparseRowMatrix& X, std::span<const int> y,
                       std::vector<std::string> class_order, const ProbeConfig& config) {
  config.validate();
  check_training_inputs(X.rows(), y, class_order);
  return fit_parameters(X, y, std::move(class_order), config, Standardizer::identity(X.cols()));
}

double decision_score(const ProbeModel& model, const Eigen::VectorXd& x) {
  if (!model.is_binary()) throw std::logic_error("decision_score requires a binary probe");
  return model.weights.row(0).dot(model.standardizer.apply(x)) + model.bias[0];
}

int predict(const ProbeModel& model, const Eigen::VectorXd& x) {
  if (model.is_binary()) return decision_score(model, x) >= 0.0 ? 1 : 0;
  const Eigen::VectorXd scores = model.weights * model.standardizer.apply(x) + model.bias;
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return static_cast<int>(best);
}

namespace {

double accuracy_from_scores(const ProbeModel& model, const Eigen::MatrixXd& scores,
                            std::span<const int> y) {
  if (y.empty()) return 0.0;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int pred;
    if (model.is_binary()) {
      pred = scores(i, 0) >= 0.0 ? 1 : 0;
    } else {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < scores.cols(); ++c) {
        if (scores(i, c) > scores(i, best)) best = c;
      }
      pred = static_cast<int>(best);
    }
    if (pred == y[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

}  // namespace

double accuracy(const ProbeModel& model, const Eigen::MatrixXd& X, std::span<const int> y) {
  Eigen::MatrixXd scores = model.standardizer.apply(X) * model.weights.transpose();
  scores.rowwise() += model.bias.transpose();
  return accuracy_from_scores(model, scores, y);
}

double accuracy(const ProbeModel& model, const SparseRowMatrix& X, std::span<const int> y) {
  // Sparse models carry an identity standardizer.
  Eigen::MatrixXd scores = X * model.weights.transpose();
  scores.rowwise() += model.bias.transpose();
  return accuracy_from_scores(model, scores, y);
}

// --- cross-validation -------------------------------------------------------------------

CVResult CVResult::from_folds(std::vector<double> per_fold) {
  CVResult r;
  const auto [mean, sd] = mean_std(per_fold);
  r.per_fold_acc = std::move(per_fold);
  r.mean_acc = mean;
  r.std_acc = sd;
  return r;
}

std::vector<int> stratified_folds(std::span<const int> y, int n_classes, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_folds: k must be at least 2");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < y.size(); ++i) by_class.at(static_cast<std::size_t>(y[i])).push_back(i);
  std::vector<int> folds(y.size(), -1);
  std::size_t deal = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    if (rows.size() < static_cast<std::size_t>(k)) {
      throw std::invalid_argument("cross-validation: class " + std::to_string(c) + " has " +
                                  std::to_string(rows.size()) + " rows, fewer than k=" +
                                  std::to_string(k));
    }
    Rng rng(derive_seed(seed, c));
    rng.shuffle(rows);
    for (std::size_t row : rows) folds[row] = static_cast<int>(deal++ % static_cast<std::size_t>(k));
  }
  return folds;
}

CVResult cross_validate(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                        const ProbeConfig& config) {
  config.validate();
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    throw std::invalid_argument("cross_validate: row/label count mismatch");
  }
  const auto folds = stratified_folds(y, n_classes, config.k_folds, config.seed);
  std::vector<std::string> class_order(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) class_order[static_cast<std::size_t>(c)] = std::to_string(c);

  std::vector<double> per_fold(static_cast<std::size_t>(config.k_folds));
  for (int f = 0; f < config.k_folds; ++f) {
    std::vector<Eigen::Index> train_rows, val_rows;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      (folds[i] == f ? val_rows : train_rows).push_back(static_cast<Eigen::Index>(i));
    }
    // Fold training and validation rows never intersect.
    std::vector<int> y_train, y_val;
    for (auto i : train_rows) y_train.push_back(y[static_cast<std::size_t>(i)]);
    for (auto i : val_rows) y_val.push_back(y[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXd X_train = X(train_rows, Eigen::all);
    const Eigen::MatrixXd X_val = X(val_rows, Eigen::all);
    const ProbeModel model = train_probe(X_train, y_train, class_order, config);
    per_fold[static_cast<std::size_t>(f)] = accuracy(model, X_val, y_val);
  }
  return CVResult::from_folds(std::move(per_fold));
}

// --- corpus-level -----------------------------------------------------------------------

std::vector<std::string> class_order_for(Target target, std::span<const ExampleMeta> meta) {
  switch (target) {
    case Target::kNationality: return {"A", "B"};
    case Target::kMedium: return {"EMI", "CMI"};
    case Target::kRole: return {"POSTDOC", "STUDENT"};
    case Target::kCohort6: {
      std::set<std::string> cohorts;
      for (const auto& m : meta) cohorts.insert(m.cohort);
      return {cohorts.begin(), cohorts.end()};
    }
  }
  return {};
}

std::optional<std::string> label_of(const ExampleMeta& m, Target target) {
  switch (target) {
    case Target::kNationality: return std::string(to_string(m.nationality));
    case Target::kMedium:
      if (m.medium == Medium::kNone) return std::nullopt;
      return std::string(to_string(m.medium));
    case Target::kRole: return std::string(to_string(m.role));
    case Target::kCohort6: return m.cohort;
  }
  return std::nullopt;
}

LabeledIds labels_for(std::span<const ExampleMeta> meta, Target target,
                      std::span<const std::string> ids) {
  LabeledIds out;
  out.class_order = class_order_for(target, meta);
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < out.class_order.size(); ++c) index[out.class_order[c]] = static_cast<int>(c);
  std::map<std::string, const ExampleMeta*> by_id;
  for (const auto& m : meta) by_id[m.example_id] = &m;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw std::out_of_range("no metadata for example " + id);
    const auto label = label_of(*it->second, target);
    if (!label) continue;
    out.ids.push_back(id);
    out.y.push_back(index.at(*label));
  }
  return out;
}

LayerSweepResult layer_sweep(const ActivationStore& store, std::span<const ExampleMeta> meta,
                             Target target, const Split& split, const ProbeConfig& config) {
  config.validate();
  const LabeledIds labeled = labels_for(meta, target, split.train_ids);
  const int n_classes = static_cast<int>(labeled.class_order.size());

  LayerSweepResult result;
  result.target = target;
  result.class_order = labeled.class_order;
  result.n_train = labeled.ids.size();
  result.per_layer.resize(store.n_layers());
  parallel_for(store.n_layers(), [&](std::size_t layer) {
    const Eigen::MatrixXd X = centroid_matrix(store, labeled.ids, layer);
    result.per_layer[layer] = cross_validate(X, labeled.y, n_classes, config);
  });

  for (std::size_t layer = 1; layer < result.per_layer.size(); ++layer) {
    if (result.per_layer[layer].mean_acc > result.per_layer[static_cast<std::size_t>(result.best_layer)].mean_acc) {
      result.best_layer = static_cast<int>(layer);
    }
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (int v : labeled.y) ++counts[static_cast<std::size_t>(v)];
  const double n = static_cast<double>(labeled.y.size());
  result.chance_level = static_cast<double>(*std::max_element(counts.begin(), counts.end())) / n;
  result.separability_threshold =
      result.chance_level + 3.0 * std::sqrt(result.chance_level * (1.0 - result.chance_level) / n);
  result.no_layer_separable = std::none_of(
      result.per_layer.begin(), result.per_layer.end(),
      [&](const CVResult& r) { return r.mean_acc > result.separability_threshold; });
  return result;
}

ProbeModel train_centroid_probe(const ActivationStore& store, std::span<const ExampleMeta> meta,
                                Target target, std::span<const std::string> ids, int layer,
                                const ProbeConfig& config) {
  const LabeledIds labeled = labels_for(meta, target, ids);
  const Eigen::MatrixXd X = centroid_matrix(store, labeled.ids, static_cast<std::size_t>(layer));
  ProbeModel model = train_probe(X, labeled.y, labeled.class_order, config);
  model.layer = layer;
  model.target = target;
  model.training_ids = labeled.ids;
  return model;
}

HoldoutResult holdout_eval(const ProbeModel& model, const ActivationStore& store,
                           std::span<const ExampleMeta> meta, const Split& split) {
  const std::set<std::string> trained(model.training_ids.begin(), model.training_ids.end());
  for (const auto& id : split.test_ids) {
    if (trained.count(id)) {
      throw LeakageError("holdout_eval: test example " + id + " was used to train the probe");
    }
  }
  const LabeledIds labeled = labels_for(meta, model.target, split.test_ids);
  if (labeled.class_order != model.class_order) {
    throw std::invalid_argument("holdout_eval: class order differs from the model's");
  }
  const Eigen::MatrixXd X = centroid_matrix(store, labeled.ids, static_cast<std::size_t>(model.layer));
  return {accuracy(model, X, labeled.y), labeled.ids.size()};
}

ProbeModel train_token_probe(const ActivationStore& store, std::span<const ExampleMeta> meta,
                             Target target, std::span<const std::string> ids, int layer,
                             const ProbeConfig& config) {
  const LabeledIds labeled = labels_for(meta, target, ids);
  if (labeled.class_order.size() != 2) {
    throw std::invalid_argument("token probes require a binary target");
  }
  std::size_t rows = 0;
  for (const auto& id : labeled.ids) rows += store.n_tokens(id);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(store.hidden_dim()));
  std::vector<int> y;
  y.reserve(rows);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < labeled.ids.size(); ++i) {
    const auto view = store.layer(labeled.ids[i], static_cast<std::size_t>(layer));
    X.middleRows(r, view.rows()) = view.cast<double>();
    r += view.rows();
    y.insert(y.end(), static_cast<std::size_t>(view.rows()), labeled.y[i]);
  }
  ProbeModel model = train_probe(X, y, labeled.class_order, config);
  model.layer = layer;
  model.target = target;
  model.training_ids = labeled.ids;
  return model;
}

std::vector<double> example_token_scores(const ProbeModel& model, const ActivationStore& store,
                                         const std::string& example_id) {
  if (!model.is_binary()) throw std::logic_error("token scores require a binary probe");
  const auto view = store.layer(example_id, static_cast<std::size_t>(model.layer));
  std::vector<double> out(static_cast<std::size_t>(view.rows()));
  for (Eigen::Index t = 0; t < view.rows(); ++t) {
    const Eigen::VectorXd x = view.row(t).transpose().cast<double>();
    out[static_cast<std::size_t>(t)] = decision_score(model, x);
  }
  return out;
}

std::vector<TokenScore> token_scores(const ProbeModel& model, const ActivationStore& store,
                                     std::span<const std::string> example_ids, int layer) {
  if (layer != model.layer) {
    throw std::invalid_argument("token_scores: model trained at layer " + std::to_string(model.layer) +
                                " cannot score layer " + std::to_string(layer));
  }
  std::vector<std::string> ids(example_ids.begin(), example_ids.end());
  std::sort(ids.begin(), ids.end());
  std::vector<TokenScore> out;
  for (const auto& id : ids) {
    const auto scores = example_token_scores(model, store, id);
    for (std::size_t t = 0; t < scores.size(); ++t) {
      out.push_back({id, layer, static_cast<int>(t), scores[t]});
    }
  }
  return out;
}

// --- serialisation ------------------------------------------------------------------------

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void to_json(nlohmann::json& j, const ProbeConfig& c) {
  j = {{"inverse_reg_C", c.inverse_reg_C},
       {"max_iter", c.max_iter},
       {"grad_tol", c.grad_tol},
       {"k_folds", c.k_folds},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ProbeConfig& c) {
  c.inverse_reg_C = j.value("inverse_reg_C", c.inverse_reg_C);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.grad_tol = j.value("grad_tol", c.grad_tol);
  c.k_folds = j.value("k_folds", c.k_folds);
  c.seed = j.value("seed", c.seed);
}

void to_json(nlohmann::json& j, const CVResult& r) {
  j = {{"per_fold_acc", r.per_fold_acc}, {"mean_acc", r.mean_acc}, {"std_acc", r.std_acc}};
}

void from_json(const nlohmann::json& j, CVResult& r) {
  r = CVResult::from_folds(j.at("per_fold_acc").get<std::vector<double>>());
}

void to_json(nlohmann::json& j, const ProbeModel& m) {
  std::vector<std::vector<double>> weights;
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
    weights.push_back(to_vec(m.weights.row(r).transpose()));
  }
  j = {{"config", m.config},
       {"class_order", m.class_order},
       {"layer", m.layer},
       {"target", to_string(m.target)},
       {"standardizer", {{"means", to_vec(m.standardizer.means)}, {"scales", to_vec(m.standardizer.scales)}}},
       {"weights", weights},
       {"bias", to_vec(m.bias)},
       {"training_ids", m.training_ids},
       {"optimizer",
        {{"iterations", m.optimizer.iterations},
         {"objective", m.optimizer.objective},
         {"grad_max_abs", m.optimizer.grad_max_abs},
         {"converged", m.optimizer.converged}}},
       {"per_fold_acc", m.cv ? nlohmann::json(m.cv->per_fold_acc) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, ProbeModel& m) {
  m.config = j.at("config").get<ProbeConfig>();
  m.class_order = j.at("class_order").get<std::vector<std::string>>();
  m.layer = j.at("layer").get<int>();
  m.target = parse_target(j.at("target").get<std::string>());
  m.standardizer.means = from_vec(j.at("standardizer").at("means").get<std::vector<double>>());
  m.standardizer.scales = from_vec(j.at("standardizer").at("scales").get<std::vector<double>>());
  const auto weights = j.at("weights").get<std::vector<std::vector<double>>>();
  const auto d = static_cast<Eigen::Index>(weights.empty() ? 0 : weights[0].size());
  m.weights.resize(static_cast<Eigen::Index>(weights.size()), d);
  for (std::size_t r = 0; r < weights.size(); ++r) {
    m.weights.row(static_cast<Eigen::Index>(r)) = from_vec(weights[r]).transpose();
  }
  m.bias = from_vec(j.at("bias").get<std::vector<double>>());
  m.training_ids = j.at("training_ids").get<std::vector<std::string>>();
  const auto& opt = j.at("optimizer");
  m.optimizer.iterations = opt.at("iterations").get<int>();
  m.optimizer.objective = opt.at("objective").get<double>();
  m.optimizer.grad_max_abs = opt.at("grad_max_abs").get<double>();
  m.optimizer.converged = opt.at("converged").get<bool>();
  if (j.contains("per_fold_acc") && !j["per_fold_acc"].is_null()) {
    m.cv = CVResult::from_folds(j["per_fold_acc"].get<std::vector<double>>());
  }
}

void to_json(nlohmann::json& j, const LayerSweepResult& r) {
  j = {{"target", to_string(r.target)},
       {"per_layer", r.per_layer},
       {"best_layer", r.best_layer},
       {"chance_level", r.chance_level},
       {"separability_threshold", r.separability_threshold},
       {"no_layer_separable", r.no_layer_separable},
       {"class_order", r.class_order},
       {"n_train", r.n_train}};
}

void from_json(const nlohmann::json& j, LayerSweepResult& r) {
  r.target = parse_target(j.at("target").get<std::string>());
  r.per_layer = j.at("per_layer").get<std::vector<CVResult>>();
  r.best_layer = j.at("best_layer").get<int>();
  r.chance_level = j.at("chance_level").get<double>();
  r.separability_threshold = j.at("separability_threshold").get<double>();
  r.no_layer_separable = j.at("no_layer_separable").get<bool>();
  r.class_order = j.at("class_order").get<std::vector<std::string>>();
  r.n_train = j.at("n_train").get<std::size_t>();
}

}  // namespace probekit
