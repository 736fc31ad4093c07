#include "biaslens/stats.hpp"

#include <algorithm>
#include <cmath>

#include "biaslens/error.hpp"

namespace biaslens {

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson needs equally sized vectors");
  const auto n = x.size();
  if (n < 2) throw Error("pearson needs at least two observations");
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

namespace {

constexpr int kMaxIterations = 500;
constexpr double kEpsilon = 1e-15;
constexpr double kTiny = 1e-300;

// Lower tail by power series.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < kMaxIterations; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * kEpsilon) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper tail by Lentz continued fraction.
double gamma_q_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw Error("regularized gamma needs a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw Error("regularized gamma needs a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_square_survival(double chi2, int dof) {
  if (dof < 1) throw Error("chi-square needs dof >= 1");
  if (chi2 < 0.0) throw Error("chi-square statistic must be nonnegative");
  return regularized_gamma_q(static_cast<double>(dof) / 2.0, chi2 / 2.0);
}

ChiSquareResult chi_square(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  if (rows < 2) throw Error("chi-square table needs at least two rows");
  const std::size_t cols = table.front().size();
  if (cols < 2) throw Error("chi-square table needs at least two columns");
  for (const auto& row : table) {
    if (row.size() != cols) throw Error("chi-square table is ragged");
    for (double cell : row) {
      if (cell < 0.0 || !std::isfinite(cell)) {
        throw Error("chi-square counts must be nonnegative finite numbers");
      }
    }
  }
  std::vector<double> row_sums(rows, 0.0), col_sums(cols, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      row_sums[r] += table[r][c];
      col_sums[c] += table[r][c];
      total += table[r][c];
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_sums[r] == 0.0) {
      throw Error("chi-square table has an all-zero row " + std::to_string(r));
    }
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (col_sums[c] == 0.0) {
      throw Error("chi-square table has an all-zero column " + std::to_string(c));
    }
  }
  ChiSquareResult result;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double expected = row_sums[r] * col_sums[c] / total;
      const double d = table[r][c] - expected;
      result.chi2 += d * d / expected;
    }
  }
  result.dof = static_cast<int>((rows - 1) * (cols - 1));
  result.p = chi_square_survival(result.chi2, result.dof);
  return result;
}

namespace {

std::optional<double> paired_pearson(const std::map<int, double>& a,
                                     const std::map<int, double>& b,
                                     std::size_t* n_out) {
  std::vector<double> x, y;
  for (const auto& [id, va] : a) {
    auto it = b.find(id);
    if (it == b.end()) continue;
    x.push_back(va);
    y.push_back(it->second);
  }
  if (n_out) *n_out = x.size();
  if (x.size() < 2) return std::nullopt;
  return pearson(x, y);
}

// Drops all-zero columns, then tests; both-rows-empty is a config error
// upstream (empty runs).
std::optional<ChiSquareResult> two_row_test(const std::vector<double>& row_a,
                                            const std::vector<double>& row_b) {
  std::vector<double> a, b;
  for (std::size_t c = 0; c < row_a.size(); ++c) {
    if (row_a[c] == 0.0 && row_b[c] == 0.0) continue;
    a.push_back(row_a[c]);
    b.push_back(row_b[c]);
  }
  if (a.size() < 2) return std::nullopt;  // a single shared category: no test
  return chi_square({a, b});
}

std::vector<double> sign_counts(const std::map<int, double>& values) {
  std::vector<double> counts(3, 0.0);  // positive, zero, negative
  for (const auto& [_, v] : values) {
    if (v > 0.0) counts[0] += 1.0;
    else if (v < 0.0) counts[2] += 1.0;
    else counts[1] += 1.0;
  }
  return counts;
}

}  // namespace

RunComparison compare_runs(const RunVectors& a, const RunVectors& b,
                           std::span<const ChiSquareFactor> factors) {
  RunComparison out;
  out.correlation.label_a = a.label;
  out.correlation.label_b = b.label;
  std::size_t n = 0;
  out.correlation.r_bias = paired_pearson(a.bias, b.bias, &n);
  out.correlation.n = n;
  if (n == 0) throw Error("compared runs share no questions");
  out.correlation.r_willingness = paired_pearson(a.willingness, b.willingness, nullptr);
  if (!a.shift.empty() && !b.shift.empty()) {
    out.correlation.r_shift = paired_pearson(a.shift, b.shift, nullptr);
  }

  for (const auto factor : factors) {
    std::optional<ChiSquareResult> result;
    switch (factor) {
      case ChiSquareFactor::kResponseCategory: {
        std::vector<double> row_a(a.category_counts.begin(), a.category_counts.end());
        std::vector<double> row_b(b.category_counts.begin(), b.category_counts.end());
        result = two_row_test(row_a, row_b);
        break;
      }
      case ChiSquareFactor::kBiasSign:
        result = two_row_test(sign_counts(a.bias), sign_counts(b.bias));
        break;
      case ChiSquareFactor::kShiftDirection:
        if (a.shift.empty() || b.shift.empty()) continue;
        result = two_row_test(sign_counts(a.shift), sign_counts(b.shift));
        break;
    }
    if (!result) continue;
    ChiSquareReport report;
    report.label_a = a.label;
    report.label_b = b.label;
    report.factor = factor;
    report.chi2 = result->chi2;
    report.dof = result->dof;
    report.p = result->p;
    out.chi_square.push_back(report);
  }
  return out;
}

}  // namespace biaslens
