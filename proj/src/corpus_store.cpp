#include "probekit/corpus_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace probekit {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little,
              "actd and npy codecs assume a little-endian host");

[[noreturn]] void format_error(const std::string& subject, const std::string& what) {
  throw DataError(DataError::Kind::kFormat, subject, what);
}

}  // namespace

std::string_view to_string(Nationality v) { return v == Nationality::kA ? "A" : "B"; }

std::string_view to_string(Medium v) {
  switch (v) {
    case Medium::kEMI: return "EMI";
    case Medium::kCMI: return "CMI";
    case Medium::kNone: return "NONE";
  }
  return "NONE";
}

std::string_view to_string(Role v) { return v == Role::kPostdoc ? "POSTDOC" : "STUDENT"; }

std::string_view to_string(TemplateFamily v) {
  switch (v) {
    case TemplateFamily::kBase: return "BASE";
    case TemplateFamily::kAlt: return "ALT";
    case TemplateFamily::kTheory: return "THEORY";
  }
  return "BASE";
}

Nationality parse_nationality(std::string_view s) {
  if (s == "A") return Nationality::kA;
  if (s == "B") return Nationality::kB;
  throw std::invalid_argument("unknown nationality: " + std::string(s));
}

Medium parse_medium(std::string_view s) {
  if (s == "EMI") return Medium::kEMI;
  if (s == "CMI") return Medium::kCMI;
  if (s == "NONE") return Medium::kNone;
  throw std::invalid_argument("unknown medium: " + std::string(s));
}

Role parse_role(std::string_view s) {
  if (s == "POSTDOC") return Role::kPostdoc;
  if (s == "STUDENT") return Role::kStudent;
  throw std::invalid_argument("unknown role: " + std::string(s));
}

TemplateFamily parse_template_family(std::string_view s) {
  if (s == "BASE") return TemplateFamily::kBase;
  if (s == "ALT") return TemplateFamily::kAlt;
  if (s == "THEORY") return TemplateFamily::kTheory;
  throw std::invalid_argument("unknown template family: " + std::string(s));
}

std::string derive_cohort(Nationality n, Medium m, Role r) {
  std::string out(to_string(n));
  out += '_';
  out += to_string(m);
  out += '_';
  out += to_string(r);
  return out;
}

// --- ActivationStore ----------------------------------------------------------

ActivationStore::ActivationStore(std::size_t n_layers, std::size_t hidden_dim)
    : n_layers_(n_layers), hidden_dim_(hidden_dim) {
  if (n_layers == 0 || hidden_dim == 0) {
    throw std::invalid_argument("ActivationStore: n_layers and hidden_dim must be positive");
  }
}

void ActivationStore::add(const std::string& example_id, ExampleActivations activations) {
  if (examples_.count(example_id)) {
    throw DataError(DataError::Kind::kDuplicateId, example_id,
                    "duplicate example_id: " + example_id);
  }
  if (activations.n_tokens == 0) {
    throw DataError(DataError::Kind::kShapeMismatch, example_id,
                    "example has no generated tokens: " + example_id);
  }
  const std::size_t expected = n_layers_ * activations.n_tokens * hidden_dim_;
  if (activations.values.size() != expected) {
    throw DataError(DataError::Kind::kShapeMismatch, example_id,
                    "activation count mismatch for " + example_id + ": expected " +
                        std::to_string(expected) + ", got " +
                        std::to_string(activations.values.size()));
  }
  for (float v : activations.values) {
    if (!std::isfinite(v)) {
      throw DataError(DataError::Kind::kNonFinite, example_id,
                      "non-finite activation value in " + example_id);
    }
  }
  examples_.emplace(example_id, std::move(activations));
}

bool ActivationStore::contains(const std::string& example_id) const {
  return examples_.count(example_id) != 0;
}

std::vector<std::string> ActivationStore::ids() const {
  std::vector<std::string> out;
  out.reserve(examples_.size());
  for (const auto& [id, _] : examples_) out.push_back(id);
  return out;
}

const ExampleActivations& ActivationStore::example(const std::string& example_id) const {
  const auto it = examples_.find(example_id);
  if (it == examples_.end()) throw std::out_of_range("unknown example_id: " + example_id);
  return it->second;
}

std::size_t ActivationStore::n_tokens(const std::string& example_id) const {
  return example(example_id).n_tokens;
}

ConstLayerView ActivationStore::layer(const std::string& example_id, std::size_t layer) const {
  const auto& ex = example(example_id);
  if (layer >= n_layers_) {
    throw std::out_of_range("layer " + std::to_string(layer) + " out of range (n_layers=" +
                            std::to_string(n_layers_) + ")");
  }
  const std::size_t block = ex.n_tokens * hidden_dim_;
  return ConstLayerView(ex.values.data() + layer * block, static_cast<Eigen::Index>(ex.n_tokens),
                        static_cast<Eigen::Index>(hidden_dim_));
}

const ExampleMeta& Corpus::find(const std::string& example_id) const {
  const auto it = std::lower_bound(
      meta.begin(), meta.end(), example_id,
      [](const ExampleMeta& m, const std::string& id) { return m.example_id < id; });
  if (it == meta.end() || it->example_id != example_id) {
    throw std::out_of_range("unknown example_id: " + example_id);
  }
  return *it;
}

// --- meta.jsonl -----------------------------------------------------------------

std::string meta_to_json_line(const ExampleMeta& m) {
  ordered_json j;
  j["example_id"] = m.example_id;
  j["nationality"] = to_string(m.nationality);
  j["medium"] = to_string(m.medium);
  j["role"] = to_string(m.role);
  j["cohort"] = m.cohort;
  j["template_family"] = to_string(m.template_family);
  j["template_id"] = m.template_id;
  j["text"] = m.text;
  j["n_generated_tokens"] = m.n_generated_tokens;
  return j.dump();
}

ExampleMeta meta_from_json_line(std::string_view line) {
  static const std::set<std::string> kFields = {
      "example_id", "nationality", "medium",   "role",
      "cohort",     "template_family", "template_id", "text",
      "n_generated_tokens"};
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    format_error("meta.jsonl", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) format_error("meta.jsonl", "record is not a JSON object");
  const std::string id = j.contains("example_id") && j["example_id"].is_string()
                             ? j["example_id"].get<std::string>()
                             : std::string("<unknown>");
  for (const auto& [key, _] : j.items()) {
    if (!kFields.count(key)) format_error(id, "unexpected field '" + key + "' in meta record " + id);
  }
  for (const auto& key : kFields) {
    if (!j.contains(key)) format_error(id, "missing field '" + key + "' in meta record " + id);
  }
  ExampleMeta m;
  try {
    m.example_id = j.at("example_id").get<std::string>();
    m.nationality = parse_nationality(j.at("nationality").get<std::string>());
    m.medium = parse_medium(j.at("medium").get<std::string>());
    m.role = parse_role(j.at("role").get<std::string>());
    m.cohort = j.at("cohort").get<std::string>();
    m.template_family = parse_template_family(j.at("template_family").get<std::string>());
    m.template_id = j.at("template_id").get<std::string>();
    m.text = j.at("text").get<std::string>();
    const auto& n = j.at("n_generated_tokens");
    if (!n.is_number_unsigned()) format_error(id, "n_generated_tokens must be a count in " + id);
    m.n_generated_tokens = n.get<std::size_t>();
  } catch (const json::exception& e) {
    format_error(id, "bad field type in meta record " + id + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    format_error(id, std::string(e.what()) + " in meta record " + id);
  }
  if (m.example_id.empty()) format_error(id, "empty example_id");
  if (m.n_generated_tokens < 1) format_error(id, "n_generated_tokens must be >= 1 in " + id);
  if (m.cohort != derive_cohort(m.nationality, m.medium, m.role)) {
    format_error(id, "cohort '" + m.cohort + "' inconsistent with nationality/medium/role in " + id);
  }
  return m;
}

std::vector<ExampleMeta> read_meta_jsonl(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::vector<ExampleMeta> out;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    out.push_back(meta_from_json_line(line));
  }
  return out;
}

void write_meta_jsonl(const std::filesystem::path& path, std::span<const ExampleMeta> meta) {
  std::string out;
  for (const auto& m : meta) {
    out += meta_to_json_line(m);
    out += '\n';
  }
  write_file(path, out);
}

// --- .actd ----------------------------------------------------------------------

std::string encode_actd(const ActdHeader& header, std::span<const float> values) {
  ordered_json h;
  h["example_id"] = header.example_id;
  h["n_layers"] = header.n_layers;
  h["hidden_dim"] = header.hidden_dim;
  h["n_tokens"] = header.n_tokens;
  h["dtype"] = "f32le";
  const std::string hdr = h.dump();
  const auto len = static_cast<std::uint32_t>(hdr.size());

  std::string out;
  out.reserve(kActdMagic.size() + 4 + hdr.size() + values.size_bytes());
  out.append(kActdMagic);
  char len_bytes[4];
  std::memcpy(len_bytes, &len, 4);
  out.append(len_bytes, 4);
  out.append(hdr);
  out.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  return out;
}

ActdHeader decode_actd(std::string_view bytes, std::vector<float>* values) {
  if (bytes.size() < kActdMagic.size() + 4 || bytes.substr(0, kActdMagic.size()) != kActdMagic) {
    format_error("actd", "bad magic, expected ACTDUMP1");
  }
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + kActdMagic.size(), 4);
  const std::size_t payload_start = kActdMagic.size() + 4 + len;
  if (bytes.size() < payload_start) format_error("actd", "truncated header");

  json h;
  try {
    h = json::parse(bytes.substr(kActdMagic.size() + 4, len));
  } catch (const json::exception& e) {
    format_error("actd", std::string("invalid header JSON: ") + e.what());
  }
  ActdHeader header;
  try {
    header.example_id = h.at("example_id").get<std::string>();
    header.n_layers = h.at("n_layers").get<std::size_t>();
    header.hidden_dim = h.at("hidden_dim").get<std::size_t>();
    header.n_tokens = h.at("n_tokens").get<std::size_t>();
    if (h.at("dtype").get<std::string>() != "f32le") format_error("actd", "unsupported dtype");
  } catch (const json::exception& e) {
    format_error("actd", std::string("bad header: ") + e.what());
  }
  const std::size_t count = header.n_layers * header.n_tokens * header.hidden_dim;
  if (bytes.size() - payload_start != count * sizeof(float)) {
    throw DataError(DataError::Kind::kShapeMismatch, header.example_id,
                    "payload size does not match header shape for " + header.example_id);
  }
  if (values) {
    values->resize(count);
    std::memcpy(values->data(), bytes.data() + payload_start, count * sizeof(float));
  }
  return header;
}

void write_actd(const std::filesystem::path& path, const std::string& example_id,
                const ActivationStore& store) {
  const auto& ex = store.example(example_id);
  ActdHeader h{example_id, store.n_layers(), store.hidden_dim(), ex.n_tokens};
  write_file(path, encode_actd(h, ex.values));
}

// --- corpus directories -----------------------------------------------------------

Corpus load_corpus(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.jsonl";
  if (!std::filesystem::exists(meta_path)) {
    throw DataError(DataError::Kind::kMissingFile, "meta.jsonl",
                    "missing meta.jsonl in " + dir.string());
  }
  Corpus corpus;
  corpus.meta = read_meta_jsonl(meta_path);
  std::set<std::string> seen;
  for (const auto& m : corpus.meta) {
    if (!seen.insert(m.example_id).second) {
      throw DataError(DataError::Kind::kDuplicateId, m.example_id,
                      "duplicate example_id in meta.jsonl: " + m.example_id);
    }
  }
  std::stable_sort(corpus.meta.begin(), corpus.meta.end(),
                   [](const ExampleMeta& a, const ExampleMeta& b) { return a.example_id < b.example_id; });
  if (corpus.meta.empty()) format_error("meta.jsonl", "corpus lists no examples");

  std::optional<std::pair<std::size_t, std::size_t>> shape;
  for (const auto& m : corpus.meta) {
    const auto path = dir / (m.example_id + ".actd");
    if (!std::filesystem::exists(path)) {
      throw DataError(DataError::Kind::kMissingFile, m.example_id,
                      "missing activation file for example " + m.example_id);
    }
    std::vector<float> values;
    ActdHeader h;
    try {
      h = decode_actd(read_file(path), &values);
    } catch (const DataError& e) {
      throw DataError(e.kind(), m.example_id, std::string(e.what()) + " (example " + m.example_id + ")");
    }
    if (h.example_id != m.example_id) {
      throw DataError(DataError::Kind::kShapeMismatch, m.example_id,
                      "header example_id '" + h.example_id + "' does not match " + m.example_id);
    }
    if (h.n_tokens != m.n_generated_tokens) {
      throw DataError(DataError::Kind::kShapeMismatch, m.example_id,
                      "n_tokens in header differs from n_generated_tokens for " + m.example_id);
    }
    if (!shape) {
      shape = {h.n_layers, h.hidden_dim};
      corpus.store = ActivationStore(h.n_layers, h.hidden_dim);
    } else if (shape->first != h.n_layers || shape->second != h.hidden_dim) {
      throw DataError(DataError::Kind::kShapeMismatch, m.example_id,
                      "layer/dim shape of " + m.example_id + " differs from the rest of the corpus");
    }
    corpus.store.add(m.example_id, ExampleActivations{h.n_tokens, std::move(values)});
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_meta_jsonl(dir / "meta.jsonl", corpus.meta);
  for (const auto& m : corpus.meta) {
    write_actd(dir / (m.example_id + ".actd"), m.example_id, corpus.store);
  }
}

ExampleActivations read_npy(const std::filesystem::path& path, std::size_t* n_layers,
                            std::size_t* hidden_dim) {
  const std::string bytes = read_file(path);
  const std::string subject = path.filename().string();
  if (bytes.size() < 10 || bytes.compare(0, 6, "\x93NUMPY") != 0) {
    format_error(subject, "not a .npy file: " + subject);
  }
  if (bytes[6] != 1) format_error(subject, "only .npy format version 1.0 is supported");
  std::uint16_t hlen = 0;
  std::memcpy(&hlen, bytes.data() + 8, 2);
  if (bytes.size() < 10u + hlen) format_error(subject, "truncated .npy header");
  const std::string header = bytes.substr(10, hlen);

  auto field = [&](const std::string& key) -> std::string {
    const auto k = header.find("'" + key + "'");
    if (k == std::string::npos) format_error(subject, "npy header lacks " + key);
    const auto colon = header.find(':', k);
    return trim(std::string_view(header).substr(colon + 1));
  };
  const std::string descr = field("descr");
  std::size_t item = 0;
  if (descr.rfind("'<f4'", 0) == 0) {
    item = 4;
  } else if (descr.rfind("'<f8'", 0) == 0) {
    item = 8;
  } else {
    format_error(subject, "unsupported npy dtype (need <f4 or <f8)");
  }
  if (field("fortran_order").rfind("False", 0) != 0) {
    format_error(subject, "fortran-ordered npy arrays are not supported");
  }
  const std::string shape_str = field("shape");
  const auto open = shape_str.find('(');
  const auto close = shape_str.find(')');
  std::vector<std::size_t> shape;
  for (const auto& part : split(shape_str.substr(open + 1, close - open - 1), ',')) {
    const auto t = trim(part);
    if (!t.empty()) shape.push_back(std::stoull(t));
  }
  std::size_t layers = 1, tokens = 0, dim = 0;
  if (shape.size() == 3) {
    layers = shape[0];
    tokens = shape[1];
    dim = shape[2];
  } else if (shape.size() == 2) {
    tokens = shape[0];
    dim = shape[1];
  } else {
    format_error(subject, "npy array must be 2-D or 3-D");
  }
  const std::size_t count = layers * tokens * dim;
  const std::size_t offset = 10u + hlen;
  if (bytes.size() - offset != count * item) {
    throw DataError(DataError::Kind::kShapeMismatch, subject, "npy payload size mismatch");
  }
  ExampleActivations out{tokens, std::vector<float>(count)};
  if (item == 4) {
    std::memcpy(out.values.data(), bytes.data() + offset, count * 4);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      double v;
      std::memcpy(&v, bytes.data() + offset + 8 * i, 8);
      out.values[i] = static_cast<float>(v);
    }
  }
  if (n_layers) *n_layers = layers;
  if (hidden_dim) *hidden_dim = dim;
  return out;
}

// --- tokens.jsonl -------------------------------------------------------------------

std::vector<TokenRecord> read_tokens_jsonl(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::vector<TokenRecord> out;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = "tokens.jsonl:" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(t);
    } catch (const json::exception& e) {
      format_error(where, where + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) format_error(where, where + ": record is not an object");
    if (j.contains("_header")) continue;
    TokenRecord r;
    try {
      r.example_id = j.at("example_id").get<std::string>();
      r.sent_index = j.at("sent_index").get<int>();
      r.token_index = j.at("token_index").get<int>();
      r.surface = j.at("surface").get<std::string>();
      r.lemma = j.at("lemma").get<std::string>();
      r.upos = j.at("upos").get<std::string>();
      r.head = j.at("head").get<int>();
      r.deprel = j.at("deprel").get<std::string>();
      if (j.contains("feats") && !j["feats"].is_null()) {
        for (const auto& [k, v] : j["feats"].items()) r.feats[k] = v.get<std::string>();
      }
    } catch (const json::exception& e) {
      format_error(where, where + ": bad token record: " + e.what());
    }
    if (r.token_index < 0) format_error(where, where + ": negative token_index");
    out.push_back(std::move(r));
  }
  return out;
}

void write_tokens_jsonl(const std::filesystem::path& path, std::span<const TokenRecord> tokens) {
  std::string out;
  for (const auto& r : tokens) {
    ordered_json j;
    j["example_id"] = r.example_id;
    j["sent_index"] = r.sent_index;
    j["token_index"] = r.token_index;
    j["surface"] = r.surface;
    j["lemma"] = r.lemma;
    j["upos"] = r.upos;
    j["head"] = r.head;
    j["deprel"] = r.deprel;
    j["feats"] = ordered_json::object();
    for (const auto& [k, v] : r.feats) j["feats"][k] = v;
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

// --- split ------------------------------------------------------------------------------

std::string_view to_string(StratifyKey k) {
  switch (k) {
    case StratifyKey::kNationality: return "nationality";
    case StratifyKey::kMedium: return "medium";
    case StratifyKey::kRole: return "role";
    case StratifyKey::kCohort: return "cohort";
    case StratifyKey::kTemplateFamily: return "template_family";
  }
  return "nationality";
}

StratifyKey parse_stratify_key(std::string_view s) {
  for (auto k : {StratifyKey::kNationality, StratifyKey::kMedium, StratifyKey::kRole,
                 StratifyKey::kCohort, StratifyKey::kTemplateFamily}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown stratify key: " + std::string(s));
}

std::string stratum_of(const ExampleMeta& m, StratifyKey key) {
  switch (key) {
    case StratifyKey::kNationality: return std::string(to_string(m.nationality));
    case StratifyKey::kMedium: return std::string(to_string(m.medium));
    case StratifyKey::kRole: return std::string(to_string(m.role));
    case StratifyKey::kCohort: return m.cohort;
    case StratifyKey::kTemplateFamily: return std::string(to_string(m.template_family));
  }
  return {};
}

bool Split::in_train(const std::string& id) const {
  return std::binary_search(train_ids.begin(), train_ids.end(), id);
}

bool Split::in_test(const std::string& id) const {
  return std::binary_search(test_ids.begin(), test_ids.end(), id);
}

Split make_split(std::span<const ExampleMeta> meta, double ratio, StratifyKey key,
                 std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0, 1)");
  std::map<std::string, std::vector<std::string>> classes;
  for (const auto& m : meta) classes[stratum_of(m, key)].push_back(m.example_id);

  struct ClassPlan {
    std::string name;
    std::vector<std::string> ids;
    std::size_t n_train;
  };
  std::vector<ClassPlan> plans;
  std::size_t class_index = 0;
  std::size_t assigned = 0;
  for (auto& [name, ids] : classes) {
    if (ids.size() < 2) {
      throw std::invalid_argument("cannot stratify: class '" + name + "' has fewer than 2 members");
    }
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(seed, class_index++));
    rng.shuffle(ids);
    auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(ids.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);
    assigned += n_train;
    plans.push_back({name, std::move(ids), n_train});
  }

  const auto target = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(meta.size()) + 0.5));
  std::vector<std::size_t> order(plans.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return plans[a].ids.size() > plans[b].ids.size();
  });
  bool progress = true;
  while (assigned < target && progress) {
    progress = false;
    for (std::size_t idx : order) {
      if (assigned >= target) break;
      auto& p = plans[idx];
      if (p.n_train + 1 < p.ids.size()) {
        ++p.n_train;
        ++assigned;
        progress = true;
      }
    }
  }

  Split split;
  split.ratio = ratio;
  split.seed = seed;
  split.key = key;
  for (const auto& p : plans) {
    split.train_ids.insert(split.train_ids.end(), p.ids.begin(), p.ids.begin() + static_cast<std::ptrdiff_t>(p.n_train));
    split.test_ids.insert(split.test_ids.end(), p.ids.begin() + static_cast<std::ptrdiff_t>(p.n_train), p.ids.end());
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

// --- centroids -----------------------------------------------------------------------------

Eigen::VectorXd centroid(const ActivationStore& store, const std::string& example_id,
                         std::size_t layer) {
  const auto view = store.layer(example_id, layer);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(view.cols());
  for (Eigen::Index r = 0; r < view.rows(); ++r) {
    sum += view.row(r).transpose().cast<double>();
  }
  return sum / static_cast<double>(view.rows());
}

Eigen::MatrixXd centroid_matrix(const ActivationStore& store, std::span<const std::string> ids,
                                std::size_t layer) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()),
                      static_cast<Eigen::Index>(store.hidden_dim()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = centroid(store, ids[i], layer).transpose();
  }
  return out;
}

}  // namespace probekit
