#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biaslens/metrics.hpp"

namespace biaslens {

struct ReportColumn {
  std::string label;  // "<model> <language>"
  bool has_shift = false;
};

struct ReportRow {
  int slot_id = 0;
  std::string genre;
  std::string question;
  bool highlight = false;
  // One entry per column; bias must be present for every column, shift only
  // for columns with an opposing run.
  std::vector<std::optional<double>> bias;
  std::vector<bool> strong_neutral;
  std::vector<std::optional<double>> shift;
};

// A labeled square matrix (correlations, p-values) for the rendered report.
struct MatrixTable {
  std::string title;
  std::vector<std::string> labels;
  std::vector<std::vector<std::optional<double>>> values;
  bool mark_below_005 = false;  // emphasize p < 0.05
};

struct UnexpectedRow {
  std::string label;
  Phase phase = Phase::kInitial;
  std::size_t explainer = 0;
  std::size_t neutral = 0;
  std::size_t total = 0;
};

struct ReportInput {
  std::string title = "Evaluation report";
  std::vector<ReportColumn> columns;
  std::vector<ReportRow> rows;
  std::vector<MatrixTable> matrices;
  std::vector<UnexpectedRow> unexpected;
};

struct ReportDocuments {
  std::string markdown;
  std::string html;
  std::string csv;
};

// Deterministic rendering; identical input yields byte-identical documents.
// Bias cells shade green toward 1 and red toward -1 with strong-neutral
// emphasis; shift cells shade purple toward 2 and green toward -2.
ReportDocuments render_table(const ReportInput& input);

// "lo,hi,count" rows for one histogram.
std::string histogram_csv(const Histogram& histogram);

}  // namespace biaslens
