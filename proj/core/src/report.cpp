#include "biaslens/report.hpp"

#include <algorithm>
#include <cmath>

#include "biaslens/csv.hpp"
#include "biaslens/error.hpp"

namespace biaslens {
namespace {

constexpr const char* kStyle = R"(<style>
body { font-family: sans-serif; font-size: 13px; }
table { border-collapse: collapse; margin: 1em 0; }
th, td { border: 1px solid #bbb; padding: 2px 6px; text-align: center; }
td.q { text-align: left; }
tr.highlight td.q { background: #cce3ff; }
.b-pos-1 { background: #e7f4e7; } .b-pos-2 { background: #cfe9cf; }
.b-pos-3 { background: #a8d8a8; } .b-pos-4 { background: #7cc57c; }
.b-pos-5 { background: #4caf50; }
.b-neg-1 { background: #fbe9e7; } .b-neg-2 { background: #f6cbc4; }
.b-neg-3 { background: #efa596; } .b-neg-4 { background: #e57d66; }
.b-neg-5 { background: #db5234; }
.strong-neutral { background: #fff176; font-weight: bold; }
.s-pos-1 { background: #f1e6f7; } .s-pos-2 { background: #ddc4ec; }
.s-pos-3 { background: #c49adf; } .s-pos-4 { background: #a96ed1; }
.s-pos-5 { background: #8e44c4; }
.s-neg-1 { background: #e7f4e7; } .s-neg-2 { background: #cfe9cf; }
.s-neg-3 { background: #a8d8a8; } .s-neg-4 { background: #7cc57c; }
.s-neg-5 { background: #4caf50; }
.p-sig { font-weight: bold; }
</style>
)";

std::string display_number(double value) { return csv::format_number(value, 2); }

int shade(double magnitude, double full_scale) {
  const int k = static_cast<int>(std::lround(std::fabs(magnitude) / full_scale * 5.0));
  return std::clamp(k, 0, 5);
}

std::string bias_class(double value, bool strong_neutral) {
  if (strong_neutral) return "strong-neutral";
  const int k = shade(value, 1.0);
  if (k == 0) return "";
  return (value >= 0.0 ? "b-pos-" : "b-neg-") + std::to_string(k);
}

std::string shift_class(double value) {
  const int k = shade(value, 2.0);
  if (k == 0) return "";
  return (value >= 0.0 ? "s-pos-" : "s-neg-") + std::to_string(k);
}

std::string escape_html(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string escape_md(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == '|') out += "\\|";
    else if (c == '\n') out.push_back(' ');
    else out.push_back(c);
  }
  return out;
}

void validate_input(const ReportInput& input) {
  if (input.columns.empty()) throw ValidationError("report has no columns");
  std::vector<std::string> findings;
  for (const auto& row : input.rows) {
    if (row.bias.size() != input.columns.size() ||
        row.strong_neutral.size() != input.columns.size() ||
        row.shift.size() != input.columns.size()) {
      findings.push_back("row " + std::to_string(row.slot_id) +
                         " does not cover every column");
      continue;
    }
    for (std::size_t c = 0; c < input.columns.size(); ++c) {
      if (!row.bias[c]) {
        findings.push_back("row " + std::to_string(row.slot_id) +
                           " missing bias for column '" + input.columns[c].label + "'");
      }
      if (input.columns[c].has_shift && !row.shift[c]) {
        findings.push_back("row " + std::to_string(row.slot_id) +
                           " missing shift for column '" + input.columns[c].label + "'");
      }
      if (row.shift[c] && (*row.shift[c] < -2.0 || *row.shift[c] > 2.0)) {
        findings.push_back("row " + std::to_string(row.slot_id) +
                           " shift outside [-2, 2]");
      }
    }
  }
  if (!findings.empty()) throw ValidationError(std::move(findings));
}

std::string render_matrix_md(const MatrixTable& matrix) {
  std::string md = "## " + matrix.title + "\n\n|  |";
  for (const auto& label : matrix.labels) md += " " + escape_md(label) + " |";
  md += "\n|---|";
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) md += "---|";
  md += "\n";
  for (std::size_t r = 0; r < matrix.labels.size(); ++r) {
    md += "| " + escape_md(matrix.labels[r]) + " |";
    for (std::size_t c = 0; c < matrix.labels.size(); ++c) {
      const auto& v = matrix.values[r][c];
      if (!v) {
        md += "  |";
      } else {
        const bool mark = matrix.mark_below_005 && *v < 0.05;
        const auto text = csv::format_number(*v, 4);
        md += mark ? " **" + text + "** |" : " " + text + " |";
      }
    }
    md += "\n";
  }
  md += "\n";
  return md;
}

std::string render_matrix_html(const MatrixTable& matrix) {
  std::string html = "<h2>" + escape_html(matrix.title) + "</h2>\n<table>\n<tr><th></th>";
  for (const auto& label : matrix.labels) {
    html += "<th>" + escape_html(label) + "</th>";
  }
  html += "</tr>\n";
  for (std::size_t r = 0; r < matrix.labels.size(); ++r) {
    html += "<tr><th>" + escape_html(matrix.labels[r]) + "</th>";
    for (std::size_t c = 0; c < matrix.labels.size(); ++c) {
      const auto& v = matrix.values[r][c];
      if (!v) {
        html += "<td></td>";
      } else {
        const bool mark = matrix.mark_below_005 && *v < 0.05;
        html += mark ? "<td class=\"p-sig\">" + csv::format_number(*v, 4) + "</td>"
                     : "<td>" + csv::format_number(*v, 4) + "</td>";
      }
    }
    html += "</tr>\n";
  }
  html += "</table>\n";
  return html;
}

}  // namespace

ReportDocuments render_table(const ReportInput& input) {
  validate_input(input);
  ReportDocuments docs;

  // ---- CSV: lossless values, stable column order.
  {
    csv::Writer w;
    w.field("genre").field("slot").field("question");
    for (const auto& col : input.columns) w.field("b[" + col.label + "]");
    for (const auto& col : input.columns) {
      if (col.has_shift) w.field("s[" + col.label + "]");
    }
    w.end_row();
    for (const auto& row : input.rows) {
      w.field(row.genre).field(static_cast<long long>(row.slot_id)).field(row.question);
      for (std::size_t c = 0; c < input.columns.size(); ++c) w.field(*row.bias[c]);
      for (std::size_t c = 0; c < input.columns.size(); ++c) {
        if (!input.columns[c].has_shift) continue;
        if (row.shift[c]) w.field(*row.shift[c]);
        else w.empty_field();
      }
      w.end_row();
    }
    docs.csv = w.str();
  }

  // ---- Markdown.
  {
    std::string md = "# " + input.title + "\n\n";
    for (const auto& matrix : input.matrices) md += render_matrix_md(matrix);
    if (!input.unexpected.empty()) {
      md += "## Unexpected outputs\n\n| run | phase | explainers | neutral | total |\n"
            "|---|---|---|---|---|\n";
      for (const auto& u : input.unexpected) {
        md += "| " + escape_md(u.label) + " | " + std::string(to_string(u.phase)) +
              " | " + std::to_string(u.explainer) + " | " + std::to_string(u.neutral) +
              " | " + std::to_string(u.total) + " |\n";
      }
      md += "\n";
    }
    md += "## Results\n\nStrong-neutral bias cells are shown in bold; highlighted "
          "rows carry a leading marker.\n\n";
    md += "| ! | genre | # | question |";
    for (const auto& col : input.columns) md += " b " + escape_md(col.label) + " |";
    for (const auto& col : input.columns) {
      if (col.has_shift) md += " s " + escape_md(col.label) + " |";
    }
    md += "\n|---|---|---|---|";
    for (std::size_t c = 0; c < input.columns.size(); ++c) md += "---|";
    for (const auto& col : input.columns) {
      if (col.has_shift) md += "---|";
    }
    md += "\n";
    for (const auto& row : input.rows) {
      md += row.highlight ? "| * | " : "|  | ";
      md += escape_md(row.genre) + " | " + std::to_string(row.slot_id) + " | " +
            escape_md(row.question) + " |";
      for (std::size_t c = 0; c < input.columns.size(); ++c) {
        const auto text = display_number(*row.bias[c]);
        md += row.strong_neutral[c] ? " **" + text + "** |" : " " + text + " |";
      }
      for (std::size_t c = 0; c < input.columns.size(); ++c) {
        if (!input.columns[c].has_shift) continue;
        md += row.shift[c] ? " " + display_number(*row.shift[c]) + " |" : "  |";
      }
      md += "\n";
    }
    docs.markdown = md;
  }

  // ---- HTML.
  {
    std::string html = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n<title>" +
                       escape_html(input.title) + "</title>\n" + kStyle +
                       "</head>\n<body>\n<h1>" + escape_html(input.title) + "</h1>\n";
    for (const auto& matrix : input.matrices) html += render_matrix_html(matrix);
    if (!input.unexpected.empty()) {
      html += "<h2>Unexpected outputs</h2>\n<table>\n"
              "<tr><th>run</th><th>phase</th><th>explainers</th><th>neutral</th>"
              "<th>total</th></tr>\n";
      for (const auto& u : input.unexpected) {
        html += "<tr><td>" + escape_html(u.label) + "</td><td>" +
                std::string(to_string(u.phase)) + "</td><td>" +
                std::to_string(u.explainer) + "</td><td>" + std::to_string(u.neutral) +
                "</td><td>" + std::to_string(u.total) + "</td></tr>\n";
      }
      html += "</table>\n";
    }
    html += "<h2>Results</h2>\n<table>\n<tr><th>genre</th><th>#</th><th>question</th>";
    for (const auto& col : input.columns) {
      html += "<th>b " + escape_html(col.label) + "</th>";
    }
    for (const auto& col : input.columns) {
      if (col.has_shift) html += "<th>s " + escape_html(col.label) + "</th>";
    }
    html += "</tr>\n";
    for (const auto& row : input.rows) {
      html += row.highlight ? "<tr class=\"highlight\">" : "<tr>";
      html += "<td>" + escape_html(row.genre) + "</td><td>" +
              std::to_string(row.slot_id) + "</td><td class=\"q\">" +
              escape_html(row.question) + "</td>";
      for (std::size_t c = 0; c < input.columns.size(); ++c) {
        const auto cls = bias_class(*row.bias[c], row.strong_neutral[c]);
        html += cls.empty() ? "<td>" : "<td class=\"" + cls + "\">";
        html += display_number(*row.bias[c]) + "</td>";
      }
      for (std::size_t c = 0; c < input.columns.size(); ++c) {
        if (!input.columns[c].has_shift) continue;
        if (!row.shift[c]) {
          html += "<td></td>";
          continue;
        }
        const auto cls = shift_class(*row.shift[c]);
        html += cls.empty() ? "<td>" : "<td class=\"" + cls + "\">";
        html += display_number(*row.shift[c]) + "</td>";
      }
      html += "</tr>\n";
    }
    html += "</table>\n</body></html>\n";
    docs.html = html;
  }

  return docs;
}

std::string histogram_csv(const Histogram& histogram) {
  csv::Writer w;
  w.field("lo").field("hi").field("count").end_row();
  for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
    w.field(histogram.edges[i])
        .field(histogram.edges[i + 1])
        .field(static_cast<long long>(histogram.counts[i]))
        .end_row();
  }
  return w.str();
}

}  // namespace biaslens
