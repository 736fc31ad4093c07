#pragma once

// Independent reference computations. Everything here is deliberately
// written as plain loops / closed forms, separate from the library's code
// paths, so tests compare two routes to the same quantity.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace biaslens::testing {

struct BruteQuestion {
  double b = 0.0;
  std::optional<double> variance;
  std::optional<double> willingness;
  bool strong_neutral = false;
};

// Mean / unbiased variance / run-normalized willingness / strong-neutral,
// recomputed from the raw answer matrix.
inline std::vector<BruteQuestion> brute_metrics(
    const std::vector<std::vector<int>>& answers) {
  std::vector<BruteQuestion> out(answers.size());
  double max_var = 0.0;
  bool any_var = false;
  for (std::size_t q = 0; q < answers.size(); ++q) {
    const auto& row = answers[q];
    double sum = 0.0;
    for (int a : row) sum += a;
    out[q].b = sum / static_cast<double>(row.size());
    if (row.size() >= 2) {
      double ss = 0.0;
      for (int a : row) {
        const double d = a - out[q].b;
        ss += d * d;
      }
      out[q].variance = ss / static_cast<double>(row.size() - 1);
      if (*out[q].variance > max_var) max_var = *out[q].variance;
      any_var = true;
    }
  }
  for (auto& q : out) {
    if (!q.variance) continue;
    q.willingness = (!any_var || max_var == 0.0) ? 1.0 : 1.0 - *q.variance / max_var;
    q.strong_neutral =
        q.willingness && q.b >= -0.2 && q.b <= 0.2 && *q.willingness >= 0.8;
  }
  return out;
}

inline double brute_shift(double b_initial, double b_opposing) {
  if (b_initial >= 0.0) return b_initial - b_opposing;
  return b_opposing - b_initial;
}

// Long-double two-pass Pearson.
inline std::optional<double> reference_pearson(std::span<const double> x,
                                               std::span<const double> y) {
  const auto n = x.size();
  long double mx = 0.0L, my = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<long double>(n);
  my /= static_cast<long double>(n);
  long double sxy = 0.0L, sxx = 0.0L, syy = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double dx = x[i] - mx;
    const long double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0L || syy == 0.0L) return std::nullopt;
  return static_cast<double>(sxy / sqrtl(sxx * syy));
}

// Chi-square upper tail via the closed forms
//   Q(x, 1) = erfc(sqrt(x/2)),  Q(x, 2) = exp(-x/2),
// lifted to higher dof with Q(x, n+2) = Q(x, n) + (x/2)^(n/2) e^(-x/2) / G(n/2+1).
// A different route than the series/continued-fraction implementation.
inline double reference_chi_square_survival(double chi2, int dof) {
  const long double z = static_cast<long double>(chi2) / 2.0L;
  long double q;
  int n;
  if (dof % 2 == 1) {
    q = erfcl(sqrtl(z));
    n = 1;
  } else {
    q = expl(-z);
    n = 2;
  }
  while (n < dof) {
    const long double a = static_cast<long double>(n) / 2.0L;
    q += expl(a * logl(z) - z - lgammal(a + 1.0L));
    n += 2;
  }
  if (q < 0.0L) q = 0.0L;
  if (q > 1.0L) q = 1.0L;
  return static_cast<double>(q);
}

// Pearson chi-square statistic recomputed directly.
inline double reference_chi2_statistic(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  const std::size_t cols = table.front().size();
  std::vector<long double> row_sum(rows, 0.0L), col_sum(cols, 0.0L);
  long double total = 0.0L;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      row_sum[r] += table[r][c];
      col_sum[c] += table[r][c];
      total += table[r][c];
    }
  }
  long double chi2 = 0.0L;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const long double expected = row_sum[r] * col_sum[c] / total;
      const long double d = table[r][c] - expected;
      chi2 += d * d / expected;
    }
  }
  return static_cast<double>(chi2);
}

// Deterministic pseudo-random answer matrices for oracle trials.
inline std::uint64_t oracle_mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::vector<std::vector<int>> random_answer_matrix(std::uint64_t seed,
                                                          std::size_t questions,
                                                          std::size_t rounds) {
  std::vector<std::vector<int>> matrix(questions, std::vector<int>(rounds));
  std::uint64_t state = seed;
  for (auto& row : matrix) {
    for (auto& cell : row) {
      state = oracle_mix(state);
      cell = static_cast<int>(state % 3) - 1;
    }
  }
  return matrix;
}

}  // namespace biaslens::testing
