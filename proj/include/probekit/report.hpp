#pragma once

// Report tables for corpus counts, probe controls, nationality contrasts,
// confounds, the sentence baseline and the layer trajectory. Cells are copied
// from upstream artifacts; nothing is recomputed here.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace probekit {

inline constexpr const char* kTableIds[] = {"T1_corpus",   "T2_probe_controls",    "T3_contrasts",
                                            "T4_confounds", "T5_sentence_baseline", "T6_trajectory"};

/// Cells are JSON values: numbers, strings, booleans, null, or
/// {"mean": m, "std": s} for cross-validated accuracies. The first cell of a
/// row is its label.
struct Table {
  std::string id;
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
  std::optional<std::string> status;  // e.g. "skipped: no annotations"
};

struct Report {
  std::vector<Table> tables;  // kTableIds order
  nlohmann::json provenance = nlohmann::json::object();

  /// Throws std::out_of_range on an unknown id.
  const Table& table(std::string_view id) const;
};

/// Upstream artifacts in their on-disk JSON form. Null members mark stages
/// that did not run.
struct ReportInputs {
  nlohmann::json corpus;      // counts per class and cohort
  nlohmann::json sweeps;      // target name -> layer sweep
  nlohmann::json controls;    // target name -> controls record
  nlohmann::json extraction;  // thresholds and per-layer counts
  nlohmann::json stats;       // stats.json; "annotated" false when tokens were absent
  nlohmann::json provenance;
};

inline constexpr const char* kSkippedNoAnnotations = "skipped: no annotations";

Report assemble_report(const ReportInputs& inputs);

nlohmann::json report_to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

/// Numbers at 6 significant digits; null renders as "null".
std::string format_cell(const nlohmann::json& cell);
std::string render_markdown(const Report& report);
/// Reads back the tables written by render_markdown (provenance is not
/// part of the markdown form).
Report parse_markdown(std::string_view markdown);

std::string render_csv(const Table& table);

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};
/// Minimal line chart; one polyline per series.
std::string render_line_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                            const std::vector<Series>& series);

/// Writes report.json, report.md and csv/<table>.csv into dir.
void emit_report(const Report& report, const std::filesystem::path& dir);

}  // namespace probekit
