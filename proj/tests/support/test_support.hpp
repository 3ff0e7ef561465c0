#pragma once

// Helpers shared by the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "probekit/annotation.hpp"

namespace probekit::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct GoldenToken {
  TokenRecord token;
  StructuralLabels labels;
  StanceFlags stance;
  Domain domain = Domain::kGeneral;
  Quality quality = Quality::kOk;
  std::string reason;
};

struct GoldenSentence {
  std::string id;
  std::string note;
  std::vector<GoldenToken> tokens;
};

/// Reads the tab-separated golden fixture; each sentence becomes example
/// "golden_<id>" with sent_index 0.
std::vector<GoldenSentence> load_golden(const std::filesystem::path& path);

struct GoldenMismatch {
  std::string sentence;
  int token_index = 0;
  std::string field;
  std::string expected;
  std::string actual;
};

/// Annotates every golden sentence with the default lexicons and compares
/// all labelled fields.
std::vector<GoldenMismatch> check_golden(const std::vector<GoldenSentence>& sentences);

std::filesystem::path fixture_path(const std::string& name);

}  // namespace probekit::testing

#include "probekit/signal_extraction.hpp"

namespace probekit::testing {

/// Brute-force oracles for the extraction step.
/// Threshold t among |values| with #{> t} < k <= #{>= t}, k = ceil(q n).
double oracle_threshold(const std::vector<double>& values, double q);
/// Every length-width slice with its mean |score|, built by direct summation.
std::vector<WindowRecord> oracle_windows(const std::vector<double>& scores, int width);
/// Greedy: repeatedly take the best remaining super-threshold candidate that
/// shares no token with anything taken. Per-anchor: every super-threshold one.
std::vector<WindowRecord> oracle_select(const std::vector<WindowRecord>& candidates, double tau, bool greedy);
/// Indices with |score| >= tau that are not the focus of a retained window.
std::vector<int> oracle_singles(const std::vector<double>& scores, double tau,
                                const std::vector<WindowRecord>& retained);

}  // namespace probekit::testing

namespace probekit::testing {

/// Statistical oracles written from the textbook definitions.
/// n (ad - bc)^2 / (r1 r2 c1 c2); Yates subtracts n/2 from |ad - bc| (floored at 0).
double oracle_chi2_2x2(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d, bool yates);
/// Hypergeometric enumeration with exact 128-bit integer weights.
double oracle_fisher(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);
/// U as #{x > y} + 0.5 #{x == y}; the two-sided p enumerates every
/// relabelling of the pooled sample.
double oracle_mann_whitney_u(const std::vector<double>& xs, const std::vector<double>& ys);
double oracle_mann_whitney_p(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace probekit::testing

#include "probekit/pipeline.hpp"
#include "probekit/synth_oracle.hpp"

namespace probekit::testing {

/// A small synthetic corpus (60 examples, 6 layers, planted at layer 3)
/// written to <root>/corpus, and a run configuration writing to <root>/run.
SynthConfig small_synth_config(bool with_tokens);
RunConfig small_run(const std::filesystem::path& root, bool with_tokens);

}  // namespace probekit::testing
