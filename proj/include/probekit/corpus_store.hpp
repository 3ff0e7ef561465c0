#pragma once

// Data model and on-disk formats: example metadata (meta.jsonl), per-example
// activation dumps (.actd), UD token records (tokens.jsonl), the stratified
// train/test split, and per-layer centroids.

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probekit/common.hpp"

namespace probekit {

enum class Nationality { kA, kB };
enum class Medium { kEMI, kCMI, kNone };
enum class Role { kPostdoc, kStudent };
enum class TemplateFamily { kBase, kAlt, kTheory };

std::string_view to_string(Nationality v);
std::string_view to_string(Medium v);
std::string_view to_string(Role v);
std::string_view to_string(TemplateFamily v);
Nationality parse_nationality(std::string_view s);
Medium parse_medium(std::string_view s);
Role parse_role(std::string_view s);
TemplateFamily parse_template_family(std::string_view s);

inline constexpr TemplateFamily kAllFamilies[] = {
    TemplateFamily::kBase, TemplateFamily::kAlt, TemplateFamily::kTheory};

/// Cohort label as "<NATIONALITY>_<MEDIUM>_<ROLE>", e.g. "A_EMI_POSTDOC".
std::string derive_cohort(Nationality n, Medium m, Role r);

struct ExampleMeta {
  std::string example_id;
  Nationality nationality = Nationality::kA;
  Medium medium = Medium::kNone;
  Role role = Role::kStudent;
  std::string cohort;
  TemplateFamily template_family = TemplateFamily::kBase;
  std::string template_id;
  std::string text;
  std::size_t n_generated_tokens = 0;
};

using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstLayerView = Eigen::Map<const RowMatrixXf>;

/// Activations of one example: n_layers blocks of n_tokens x hidden_dim
/// floats, layer-major, rows contiguous.
struct ExampleActivations {
  std::size_t n_tokens = 0;
  std::vector<float> values;
};

/// Immutable-after-build container of per-example, per-layer activation
/// matrices. Iteration order is by example id.
class ActivationStore {
 public:
  ActivationStore() = default;
  ActivationStore(std::size_t n_layers, std::size_t hidden_dim);

  /// Throws DataError on duplicate id, wrong value count, or non-finite values.
  void add(const std::string& example_id, ExampleActivations activations);

  std::size_t n_layers() const noexcept { return n_layers_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  std::size_t size() const noexcept { return examples_.size(); }
  bool contains(const std::string& example_id) const;
  std::vector<std::string> ids() const;

  const ExampleActivations& example(const std::string& example_id) const;
  std::size_t n_tokens(const std::string& example_id) const;
  /// Token x dim view of one layer. Throws std::out_of_range on unknown id or layer.
  ConstLayerView layer(const std::string& example_id, std::size_t layer) const;

 private:
  std::size_t n_layers_ = 0;
  std::size_t hidden_dim_ = 0;
  std::map<std::string, ExampleActivations, std::less<>> examples_;
};

struct Corpus {
  ActivationStore store;
  std::vector<ExampleMeta> meta;  // sorted by example_id

  const ExampleMeta& find(const std::string& example_id) const;
};

// --- meta.jsonl ---------------------------------------------------------

std::vector<ExampleMeta> read_meta_jsonl(const std::filesystem::path& path);
void write_meta_jsonl(const std::filesystem::path& path, std::span<const ExampleMeta> meta);
std::string meta_to_json_line(const ExampleMeta& m);
ExampleMeta meta_from_json_line(std::string_view line);

// --- .actd --------------------------------------------------------------

inline constexpr std::string_view kActdMagic = "ACTDUMP1";

struct ActdHeader {
  std::string example_id;
  std::size_t n_layers = 0;
  std::size_t hidden_dim = 0;
  std::size_t n_tokens = 0;
};

/// Canonical .actd bytes: magic, u32le header length, compact JSON header
/// with keys in field order, then little-endian f32 payload.
std::string encode_actd(const ActdHeader& header, std::span<const float> values);
ActdHeader decode_actd(std::string_view bytes, std::vector<float>* values);

void write_actd(const std::filesystem::path& path, const std::string& example_id,
                const ActivationStore& store);

// --- corpus directories --------------------------------------------------

/// Loads meta.jsonl plus <id>.actd for every listed id. Errors (DataError):
/// kMissingFile names the id, kShapeMismatch, kNonFinite, kDuplicateId, kFormat.
Corpus load_corpus(const std::filesystem::path& dir);
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Reads a NumPy .npy v1.0 array of '<f4' or '<f8' with shape
/// (n_layers, n_tokens, dim) or (n_tokens, dim), C order.
ExampleActivations read_npy(const std::filesystem::path& path, std::size_t* n_layers,
                            std::size_t* hidden_dim);

// --- tokens.jsonl ---------------------------------------------------------

struct TokenRecord {
  std::string example_id;
  int sent_index = 0;
  int token_index = 0;  // 0-based within example
  std::string surface;
  std::string lemma;
  std::string upos;
  int head = -1;  // token_index of head, -1 for root
  std::string deprel;
  std::map<std::string, std::string> feats;
};

/// Skips blank lines, lines starting with '#', and header records carrying a
/// "_header" key (parser version metadata).
std::vector<TokenRecord> read_tokens_jsonl(const std::filesystem::path& path);
void write_tokens_jsonl(const std::filesystem::path& path, std::span<const TokenRecord> tokens);

// --- split ------------------------------------------------------------------

enum class StratifyKey { kNationality, kMedium, kRole, kCohort, kTemplateFamily };

std::string_view to_string(StratifyKey k);
StratifyKey parse_stratify_key(std::string_view s);
std::string stratum_of(const ExampleMeta& m, StratifyKey key);

struct Split {
  std::vector<std::string> train_ids;  // sorted
  std::vector<std::string> test_ids;   // sorted
  double ratio = 0.8;
  std::uint64_t seed = 0;
  StratifyKey key = StratifyKey::kNationality;

  bool in_train(const std::string& id) const;
  bool in_test(const std::string& id) const;
};

/// Per class: ids sorted, shuffled with a derived stream, floor(ratio * n_c)
/// taken for training (clamped to [1, n_c - 1]); the remainder up to
/// round(ratio * N) is handed out round-robin by class size descending.
Split make_split(std::span<const ExampleMeta> meta, double ratio, StratifyKey key,
                 std::uint64_t seed);

// --- centroids ----------------------------------------------------------------

/// Column means of one example's layer matrix, accumulated in double.
Eigen::VectorXd centroid(const ActivationStore& store, const std::string& example_id,
                         std::size_t layer);
/// Rows are centroids of ids, in the given order.
Eigen::MatrixXd centroid_matrix(const ActivationStore& store, std::span<const std::string> ids,
                                std::size_t layer);

}  // namespace probekit
