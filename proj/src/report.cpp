#include "probekit/report.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <sstream>

#include "probekit/common.hpp"

namespace probekit {

using nlohmann::json;

namespace {

const json kNull = nullptr;

// Missing keys and type mismatches along the path yield null.
const json& at(const json& j, std::initializer_list<std::string_view> path) {
  const json* cur = &j;
  for (auto key : path) {
    if (!cur->is_object()) return kNull;
    const auto it = cur->find(key);
    if (it == cur->end()) return kNull;
    cur = &*it;
  }
  return *cur;
}

json cv_cell(const json& cv) {
  if (!cv.is_object() || !cv.contains("mean_acc")) return nullptr;
  return {{"mean", cv["mean_acc"]}, {"std", cv["std_acc"]}};
}

json layer_entry(const json& per_layer, const json& layer) {
  if (!per_layer.is_array() || !layer.is_number_integer()) return nullptr;
  const auto l = layer.get<std::int64_t>();
  if (l < 0 || static_cast<std::size_t>(l) >= per_layer.size()) return nullptr;
  return per_layer[static_cast<std::size_t>(l)];
}

std::string layer_list(const json& layers) {
  std::string out = "Layers ";
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (i) out += ", ";
    out += layers[i].dump();
  }
  return out;
}

Table corpus_table(const ReportInputs& in) {
  Table t{"T1_corpus", "Corpus and analysis datasets",
          {"Dataset", "N before filtering", "N after filtering", "A", "B", "Notes"}, {}, {}};
  const json& c = in.corpus;
  t.rows.push_back({"Generated texts", at(c, {"n_examples"}), at(c, {"n_examples"}), at(c, {"n_a"}), at(c, {"n_b"}),
                    at(c, {"cohort_note"})});

  const json& ds = at(in.stats, {"datasets"});
  const json& width = at(in.extraction, {"config", "window_width"});
  const json& layers = at(in.extraction, {"config", "sampled_layers"});
  const std::string window_label =
      width.is_number_integer() ? fmt::format("{}-token windows", width.get<int>()) : "Windows";
  const json layer_note = layers.is_array() ? json(layer_list(layers)) : json(nullptr);
  auto dataset_row = [&](const std::string& label, const char* key, json note) {
    const json& d = at(ds, {key});
    t.rows.push_back({label, at(d, {"n_input"}), at(d, {"n_ok"}), at(d, {"n_a"}), at(d, {"n_b"}), std::move(note)});
  };
  dataset_row(window_label, "windows", layer_note);
  dataset_row("Single tokens", "singles", "Excludes window anchors");
  dataset_row("Sentence-level baseline", "sentences", "Full surface text");

  const json& per_layer = at(in.extraction, {"per_layer"});
  if (per_layer.is_array()) {
    for (const auto& row : per_layer) {
      const std::string layer = row["layer"].dump();
      t.rows.push_back({"Windows at layer " + layer, row["n_windows"],
                        at(ds, {"windows", "by_layer", layer}), nullptr, nullptr, nullptr});
    }
  }
  const json& by_cohort = at(ds, {"windows", "by_cohort"});
  if (by_cohort.is_object()) {
    for (const auto& [cohort, n] : by_cohort.items()) {
      t.rows.push_back({"Windows, cohort " + cohort, nullptr, n, nullptr, nullptr, nullptr});
    }
  }
  return t;
}

Table controls_table(const ReportInputs& in) {
  static const char* kTargets[] = {"nationality", "medium", "role"};
  Table t{"T2_probe_controls", "Probe performance and controls", {"Measure", "Nationality", "Medium", "Role"}, {}, {}};
  auto row = [&](const std::string& label, auto&& cell) {
    std::vector<json> r{label};
    for (const char* target : kTargets) r.push_back(cell(at(in.sweeps, {target}), at(in.controls, {target})));
    t.rows.push_back(std::move(r));
  };
  row("Best layer", [](const json& s, const json&) { return at(s, {"best_layer"}); });
  row("Cross-validated accuracy", [](const json& s, const json&) {
    return cv_cell(layer_entry(at(s, {"per_layer"}), at(s, {"best_layer"})));
  });
  row("Held-out test accuracy", [](const json&, const json& c) { return at(c, {"holdout", "accuracy"}); });
  row("Mean shuffled accuracy", [](const json&, const json& c) { return at(c, {"shuffle", "mean_shuffled_acc"}); });
  row("Selectivity", [](const json&, const json& c) { return at(c, {"selectivity"}); });
  row("Surface-text skyline, CV", [](const json&, const json& c) { return cv_cell(at(c, {"skyline", "cv"})); });
  row("Skyline, held-out test", [](const json&, const json& c) { return at(c, {"skyline", "holdout_acc"}); });
  row("Chance level", [](const json& s, const json&) { return at(s, {"chance_level"}); });
  row("No layer separable", [](const json& s, const json&) { return at(s, {"no_layer_separable"}); });

  // Transfer pairs in the order of the first target that has them.
  json pairs;
  for (const char* target : kTargets) {
    pairs = at(in.controls, {target, "transfer", "pairs"});
    if (pairs.is_array()) break;
  }
  if (pairs.is_array()) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string label = fmt::format("Transfer {} to {}", pairs[i]["train_family"].get<std::string>(),
                                            pairs[i]["test_family"].get<std::string>());
      row(label, [&](const json&, const json& c) {
        const json& p = at(c, {"transfer", "pairs"});
        return p.is_array() && i < p.size() ? p[i]["accuracy"] : json(nullptr);
      });
    }
  }
  return t;
}

std::string_view variable_label(std::string_view key) {
  if (key == "phrase_type") return "Phrase type";
  if (key == "modifier_structure") return "Modifier structure";
  if (key == "clause_slot") return "Clause slot";
  if (key == "predicate_type") return "Predicate type";
  if (key == "upos") return "UPOS";
  return key;
}

bool annotated(const ReportInputs& in) { return at(in.stats, {"annotated"}) == json(true); }

std::optional<std::string> annotation_status(const ReportInputs& in) {
  if (in.stats.is_null()) return "skipped: statistics not run";
  if (!annotated(in)) return std::string(kSkippedNoAnnotations);
  return std::nullopt;
}

Table contrasts_table(const ReportInputs& in) {
  Table t{"T3_contrasts",
          "Key nationality contrasts in probe-selected data",
          {"Comparison", "Dataset", "Predicted higher", "Rate A", "Rate B", "Statistic", "df", "p", "p adjusted",
           "Family size", "Odds ratio", "Effect size", "Direction confirmed"},
          {},
          annotation_status(in)};
  if (t.status) return t;
  for (const char* dataset : {"windows", "singles"}) {
    const json& hyps = at(in.stats, {dataset, "hypotheses"});
    if (!hyps.is_array()) continue;
    for (const auto& h : hyps) {
      const json& test = h["test"];
      t.rows.push_back({h["description"], dataset, h["predicted_higher"], h["rate_a"], h["rate_b"],
                        test["statistic"], test["df"], test["p_value"], test["p_adjusted"], test["family_size"],
                        h["odds_ratio"], test["effect_size"], test["direction_confirmed"]});
    }
  }
  for (const char* dataset : {"windows", "singles"}) {
    const json& vars = at(in.stats, {dataset, "variables"});
    if (!vars.is_object()) continue;
    for (const auto& [key, test] : vars.items()) {
      const std::string label = std::string(variable_label(key)) + " x nationality";
      if (test.is_null()) {
        t.rows.push_back({label, dataset, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr,
                          nullptr, nullptr, nullptr});
        continue;
      }
      t.rows.push_back({label, dataset, nullptr, nullptr, nullptr, test["statistic"], test["df"], test["p_value"],
                        nullptr, nullptr, nullptr, test["effect_size"], nullptr});
    }
  }
  return t;
}

std::string joined(const json& list) {
  std::string out;
  if (!list.is_array()) return out;
  for (const auto& s : list) {
    if (!out.empty()) out += "; ";
    out += s.get<std::string>();
  }
  return out;
}

Table confounds_table(const ReportInputs& in) {
  Table t{"T4_confounds",
          "Confound-control summary",
          {"Comparison", "n", "Test", "Statistic", "df", "p", "Effect size", "Warnings", "Error"},
          {},
          annotation_status(in)};
  if (t.status) return t;
  const json& rows = at(in.stats, {"confounds"});
  if (!rows.is_array()) return t;
  for (const auto& r : rows) {
    const json& test = r["test"];
    if (test.is_null()) {
      t.rows.push_back({r["description"], r["subset_n"], nullptr, nullptr, nullptr, nullptr, nullptr, nullptr,
                        r["error"]});
      continue;
    }
    const std::string warnings = joined(test["warnings"]);
    t.rows.push_back({r["description"], r["subset_n"], test["test_name"], test["statistic"], test["df"],
                      test["p_value"], test["effect_size"], warnings.empty() ? json(nullptr) : json(warnings),
                      r["error"]});
  }
  return t;
}

Table sentence_table(const ReportInputs& in) {
  Table t{"T5_sentence_baseline",
          "Sentence-level baseline summary",
          {"Measure", "Rate A", "Rate B", "Statistic", "df", "p", "p adjusted", "Family size", "Effect size"},
          {},
          annotation_status(in)};
  if (t.status) return t;
  const json& s = at(in.stats, {"sentences"});
  for (const char* key : {"phrase_type", "upos", "predicate_type"}) {
    const json& test = at(s, {"structural", key});
    const json label = std::string(variable_label(key));
    if (test.is_null()) {
      t.rows.push_back({label, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr});
      continue;
    }
    t.rows.push_back({label, nullptr, nullptr, test["statistic"], test["df"], test["p_value"], nullptr, nullptr,
                      test["effect_size"]});
  }
  const json& stance = at(s, {"stance"});
  if (stance.is_array()) {
    for (const auto& h : stance) {
      const json& test = h["test"];
      std::string label = h["id"].get<std::string>();
      label[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(label[0])));
      t.rows.push_back({label + " rate", h["rate_a"], h["rate_b"], test["statistic"], test["df"], test["p_value"],
                        test["p_adjusted"], test["family_size"], h["odds_ratio"]});
    }
  }
  const json& pos = at(s, {"position_by_stance"});
  t.rows.push_back({"Position x any marker", nullptr, nullptr, at(pos, {"statistic"}), at(pos, {"df"}),
                    at(pos, {"p_value"}), nullptr, nullptr, at(pos, {"effect_size"})});
  return t;
}

Table trajectory_table(const ReportInputs& in) {
  Table t{"T6_trajectory",
          "Layer trajectory and domain summary",
          {"Layer", "Windows", "Mean score A", "Mean score B", "Score gap", "Gap p", "UPOS V", "Modifier structure V",
           "Phrase type V", "Domain rate A", "Domain rate B", "Domain odds ratio", "Domain statistic", "Domain p",
           "Domain V", "Notice"},
          {},
          {}};
  if (in.stats.is_null()) {
    t.status = "skipped: statistics not run";
    return t;
  }
  const json& traj = at(in.stats, {"trajectory"});
  if (traj.is_array()) {
    for (const auto& r : traj) {
      const json& d = r["domain"];
      const std::string notice = r["notice"].is_string() ? r["notice"].get<std::string>() : "";
      t.rows.push_back({r["layer"], r["n_windows"], r["mean_score_a"], r["mean_score_b"], r["score_gap"],
                        at(r, {"score_test", "p_value"}), at(r, {"variables", "upos", "effect_size"}),
                        at(r, {"variables", "modifier_structure", "effect_size"}),
                        at(r, {"variables", "phrase_type", "effect_size"}), at(d, {"rate_a"}), at(d, {"rate_b"}),
                        at(d, {"odds_ratio"}), at(d, {"test", "statistic"}), at(d, {"test", "p_value"}),
                        at(d, {"test", "effect_size"}), notice.empty() ? json(nullptr) : json(notice)});
    }
  }
  for (const char* dataset : {"windows", "singles"}) {
    const json& d = at(in.stats, {dataset, "domain"});
    if (d.is_null()) continue;
    t.rows.push_back({fmt::format("Domain {}, {}", d["domain"].get<std::string>(), dataset), nullptr, nullptr,
                      nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, d["rate_a"], d["rate_b"], d["odds_ratio"],
                      at(d, {"test", "statistic"}), at(d, {"test", "p_value"}), at(d, {"test", "effect_size"}),
                      nullptr});
  }
  return t;
}

std::string escape_md(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::vector<std::string> split_md_row(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool started = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\' && i + 1 < line.size()) {
      cur += line[++i];
    } else if (c == '|') {
      if (started) cells.push_back(trim(cur));
      started = true;
      cur.clear();
    } else {
      cur += c;
    }
  }
  return cells;
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return v;
}

json parse_cell(const std::string& s) {
  if (s == "null") return nullptr;
  if (s == "true") return true;
  if (s == "false") return false;
  if (const auto pm = s.find(" ± "); pm != std::string::npos) {
    const auto m = parse_number(s.substr(0, pm));
    const auto sd = parse_number(s.substr(pm + std::string_view(" ± ").size()));
    if (m && sd) return {{"mean", *m}, {"std", *sd}};
  }
  std::int64_t i = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (ec == std::errc() && ptr == s.data() + s.size()) return i;
  if (const auto v = parse_number(s)) return *v;
  return s;
}

std::string csv_field(const json& cell) {
  if (cell.is_null()) return "";
  std::string s;
  if (cell.is_string()) {
    s = cell.get<std::string>();
  } else if (cell.is_object()) {
    s = cell["mean"].dump() + " ± " + cell["std"].dump();
  } else {
    s = cell.dump();
  }
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

const Table& Report::table(std::string_view id) const {
  for (const auto& t : tables) {
    if (t.id == id) return t;
  }
  throw std::out_of_range("no table " + std::string(id));
}

Report assemble_report(const ReportInputs& inputs) {
  Report r;
  r.tables = {corpus_table(inputs),   controls_table(inputs), contrasts_table(inputs),
              confounds_table(inputs), sentence_table(inputs), trajectory_table(inputs)};
  r.provenance = inputs.provenance.is_null() ? json::object() : inputs.provenance;
  return r;
}

json report_to_json(const Report& report) {
  json tables = json::object();
  for (const auto& t : report.tables) {
    tables[t.id] = {{"title", t.title},
                    {"status", t.status ? json(*t.status) : json(nullptr)},
                    {"columns", t.columns},
                    {"rows", t.rows}};
  }
  return {{"tables", tables}, {"provenance", report.provenance}};
}

Report report_from_json(const json& j) {
  Report r;
  const json& tables = j.at("tables");
  for (const char* id : kTableIds) {
    const json& t = tables.at(id);
    Table table;
    table.id = id;
    table.title = t.at("title").get<std::string>();
    if (!t.at("status").is_null()) table.status = t["status"].get<std::string>();
    table.columns = t.at("columns").get<std::vector<std::string>>();
    for (const auto& row : t.at("rows")) table.rows.push_back(row.get<std::vector<json>>());
    r.tables.push_back(std::move(table));
  }
  r.provenance = j.value("provenance", json::object());
  return r;
}

std::string format_cell(const json& cell) {
  if (cell.is_null()) return "null";
  if (cell.is_boolean()) return cell.get<bool>() ? "true" : "false";
  if (cell.is_number_integer()) return cell.dump();
  if (cell.is_number()) return fmt::format("{:.6g}", cell.get<double>());
  if (cell.is_string()) return cell.get<std::string>();
  if (cell.is_object() && cell.contains("mean") && cell.contains("std")) {
    return format_cell(cell["mean"]) + " ± " + format_cell(cell["std"]);
  }
  return cell.dump();
}

std::string render_markdown(const Report& report) {
  std::string out = "# Probe report\n";
  if (report.provenance.contains("run_id")) {
    out += "\nRun: " + format_cell(report.provenance["run_id"]) + "\n";
  }
  for (const auto& t : report.tables) {
    out += fmt::format("\n## {}: {}\n\n", t.id, t.title);
    if (t.status) out += "Status: " + *t.status + "\n\n";
    out += "|";
    for (const auto& c : t.columns) out += " " + escape_md(c) + " |";
    out += "\n|";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += " --- |";
    out += "\n";
    for (const auto& row : t.rows) {
      out += "|";
      for (const auto& cell : row) out += " " + escape_md(format_cell(cell)) + " |";
      out += "\n";
    }
  }
  return out;
}

Report parse_markdown(std::string_view markdown) {
  Report r;
  Table* cur = nullptr;
  int table_line = 0;
  std::istringstream in{std::string(markdown)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("## ", 0) == 0) {
      const auto colon = line.find(": ");
      if (colon == std::string::npos) throw DataError(DataError::Kind::kFormat, "report.md", "bad heading: " + line);
      r.tables.push_back(Table{line.substr(3, colon - 3), line.substr(colon + 2), {}, {}, {}});
      cur = &r.tables.back();
      table_line = 0;
    } else if (cur && line.rfind("Status: ", 0) == 0) {
      cur->status = line.substr(8);
    } else if (cur && line.rfind("|", 0) == 0) {
      auto cells = split_md_row(line);
      if (table_line == 0) {
        cur->columns = std::move(cells);
      } else if (table_line > 1) {
        std::vector<json> row;
        for (const auto& c : cells) row.push_back(parse_cell(c));
        cur->rows.push_back(std::move(row));
      }
      ++table_line;
    }
  }
  return r;
}

std::string render_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += csv_field(table.columns[i]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_field(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string render_line_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                            const std::vector<Series>& series) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  constexpr double kW = 640, kH = 360, kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        x0 = x1 = x;
        y0 = y1 = y;
        first = false;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n", kW, kH, kW, kH);
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += fmt::format("<text x=\"{}\" y=\"24\" font-size=\"14\" font-family=\"sans-serif\">{}</text>\n", kLeft,
                     xml_escape(title));
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kLeft, kTop + ph,
                     kLeft + pw);
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop, kTop + ph);
  out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" font-size=\"12\" font-family=\"sans-serif\">{}</text>\n",
                     kLeft + pw / 2, kH - 12, xml_escape(x_label));
  out += fmt::format(
      "<text x=\"14\" y=\"{:.1f}\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 14 {:.1f})\">"
      "{}</text>\n",
      kTop + ph / 2, kTop + ph / 2, xml_escape(y_label));
  out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" font-size=\"10\" font-family=\"sans-serif\">{:.3g}</text>\n",
                     kLeft - 40, py(y1) + 4, y1);
  out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" font-size=\"10\" font-family=\"sans-serif\">{:.3g}</text>\n",
                     kLeft - 40, py(y0) + 4, y0);
  out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"10\" font-family=\"sans-serif\">{:g}</text>\n",
                     px(x0), kTop + ph + 14, x0);
  out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"10\" font-family=\"sans-serif\">{:g}</text>\n",
                     px(x1), kTop + ph + 14, x1);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    std::string pts;
    for (const auto& [x, y] : series[i].points) pts += fmt::format("{:.2f},{:.2f} ", px(x), py(y));
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", color, trim(pts));
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"12\" font-family=\"sans-serif\" fill=\"{}\">{}</text>\n",
                       kLeft + pw + 10, kTop + 16.0 * static_cast<double>(i + 1), color, xml_escape(series[i].name));
  }
  out += "</svg>\n";
  return out;
}

void emit_report(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "csv", ec);
  if (ec) throw std::runtime_error("cannot create report directory " + dir.string() + ": " + ec.message());
  write_file(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_file(dir / "report.md", render_markdown(report));
  for (const auto& t : report.tables) write_file(dir / "csv" / (t.id + ".csv"), render_csv(t));
}

}  // namespace probekit
