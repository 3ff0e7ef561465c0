#pragma once

// Shared infrastructure: error types, reproducible random streams, a small
// deterministic parallel_for, and content hashing for provenance records.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace probekit {

/// Invalid run configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  enum class Kind {
    kMissingFile,
    kShapeMismatch,
    kNonFinite,
    kDuplicateId,
    kFormat,
  };

  DataError(Kind kind, std::string subject, const std::string& what)
      : std::runtime_error(what), kind_(kind), subject_(std::move(subject)) {}

  Kind kind() const noexcept { return kind_; }
  /// The example id, file, or field the error concerns.
  const std::string& subject() const noexcept { return subject_; }

 private:
  Kind kind_;
  std::string subject_;
};

/// An evaluation would touch rows the model was fitted on.
class LeakageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// SplitMix64 finaliser; maps (master, index) to an independent stream seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Seeded generator whose draws are identical across standard libraries.
/// std::shuffle and the std distributions are implementation-defined, so
/// bounded integers, uniforms and normals are derived here from raw
/// mt19937_64 output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform double in [0, 1).
  double uniform();
  /// Standard normal (Box-Muller, cached second variate).
  double normal();

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Worker count from PROBEKIT_WORKERS (default: hardware concurrency).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Results must
/// be written to per-index slots; the first exception (lowest index) is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Hex SHA-256 of a byte string / file.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool is_valid_utf8(std::string_view s);

/// Population mean and standard deviation (divisor n).
std::pair<double, double> mean_std(std::span<const double> xs);

}  // namespace probekit
