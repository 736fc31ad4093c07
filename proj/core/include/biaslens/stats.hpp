#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biaslens/types.hpp"

namespace biaslens {

// Sample Pearson correlation; nullopt when undefined (a constant vector).
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct ChiSquareResult {
  double chi2 = 0.0;
  int dof = 0;
  double p = 1.0;
};

// Pearson chi-square test of independence on a contingency table of counts.
// Throws on a zero marginal row/column.
ChiSquareResult chi_square(const std::vector<std::vector<double>>& table);

// Regularized incomplete gamma functions (series / continued fraction).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Upper tail of the chi-square distribution: Q(dof/2, chi2/2).
double chi_square_survival(double chi2, int dof);

enum class ChiSquareFactor { kResponseCategory, kBiasSign, kShiftDirection };

inline std::string_view to_string(ChiSquareFactor factor) {
  switch (factor) {
    case ChiSquareFactor::kResponseCategory: return "category";
    case ChiSquareFactor::kBiasSign: return "bias-sign";
    case ChiSquareFactor::kShiftDirection: return "shift-direction";
  }
  return "category";
}

inline ChiSquareFactor parse_chi_square_factor(std::string_view text) {
  if (text == "category") return ChiSquareFactor::kResponseCategory;
  if (text == "bias-sign") return ChiSquareFactor::kBiasSign;
  if (text == "shift-direction") return ChiSquareFactor::kShiftDirection;
  throw ParseError("unknown chi-square factor: " + std::string(text));
}

// Per-question vectors and response-category counts of one run, keyed by
// question id so comparisons align on the shared bank.
struct RunVectors {
  std::string label;
  std::map<int, double> bias;
  std::map<int, double> willingness;
  std::map<int, double> shift;  // opposing-phase runs only
  std::array<std::size_t, 4> category_counts{};  // affirm, negate, neutral, explainer
};

struct CorrelationReport {
  std::string label_a, label_b;
  std::optional<double> r_bias, r_willingness, r_shift;
  std::size_t n = 0;  // questions compared
};

struct ChiSquareReport {
  std::string label_a, label_b;
  ChiSquareFactor factor = ChiSquareFactor::kResponseCategory;
  double chi2 = 0.0;
  int dof = 0;
  double p = 1.0;
};

struct RunComparison {
  CorrelationReport correlation;
  std::vector<ChiSquareReport> chi_square;
};

// Correlations over the question intersection plus chi-square tests on the
// requested factors. All-zero rows/columns are dropped from contingency
// tables before testing.
RunComparison compare_runs(const RunVectors& a, const RunVectors& b,
                           std::span<const ChiSquareFactor> factors);

}  // namespace biaslens
