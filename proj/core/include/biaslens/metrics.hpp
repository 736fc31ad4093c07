#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "biaslens/bank.hpp"
#include "biaslens/types.hpp"

namespace biaslens {

// Per-question scores for one (model, language, phase) run. Variance and
// willingness are undefined below two rounds; strong_neutral is only
// meaningful when willingness is defined.
struct QuestionMetrics {
  int question_id = 0;
  Phase phase = Phase::kInitial;
  double bias = 0.0;
  std::optional<double> variance;
  std::optional<double> willingness;
  bool strong_neutral = false;
  int n_rounds = 0;
};

struct ShiftMetrics {
  int question_id = 0;
  double bias_initial = 0.0;
  double bias_opposing = 0.0;
  double shift = 0.0;  // in [-2, 2]
  Stance stance_injected = Stance::kNegate;
};

// One merged result slot. Split pairs combine their sides; plain slots copy
// their single question's values.
struct MergedResult {
  int slot_id = 0;
  std::optional<int> pair_id;
  double bias = 0.0;
  std::optional<double> willingness;
  std::optional<double> shift;
  bool strong_neutral = false;
  std::optional<double> bias_a, bias_b;    // split components
  std::optional<double> shift_a, shift_b;
};

// Mean answer value. Values must lie in {-1, 0, 1}; throws on empty input.
double bias(std::span<const int> answers);

// Unbiased sample variance around the given mean; requires n >= 2.
double unbiased_variance(std::span<const int> answers, double mean);

// w = 1 - var/max(var) over the run; a run where every question has zero
// variance gets w = 1 everywhere.
std::vector<std::optional<double>> willingness(
    std::span<const std::optional<double>> variances);

bool is_strong_neutral(double bias_value, std::optional<double> willingness_value);

// Change of bias toward the injected opposing opinion.
double bias_shift(double bias_initial, double bias_opposing);

struct AnswerSeries {
  int question_id = 0;
  std::vector<int> values;  // one per round, round order
};

// Bias/variance/willingness/strong-neutral for every series of one run.
std::vector<QuestionMetrics> run_metrics(std::span<const AnswerSeries> series,
                                         Phase phase);

ShiftMetrics make_shift(int question_id, double bias_initial, double bias_opposing,
                        Stance stance_injected);

// merged bias = (b_A - b_B) / 2, merged shift/willingness = averages.
MergedResult merge_split(int pair_id, const QuestionMetrics& side_a,
                         const QuestionMetrics& side_b,
                         const std::optional<ShiftMetrics>& shift_a,
                         const std::optional<ShiftMetrics>& shift_b);

MergedResult merged_single(const QuestionMetrics& metrics,
                           const std::optional<ShiftMetrics>& shift);

// One merged result per slot of the bank's merged numbering.
std::vector<MergedResult> merged_results(
    const QuestionBank& bank, const std::map<int, QuestionMetrics>& metrics,
    const std::map<int, ShiftMetrics>& shifts);

struct Histogram {
  std::vector<double> edges;        // size = counts.size() + 1, ascending
  std::vector<std::size_t> counts;  // [edge_i, edge_i+1), last bucket closed
};

Histogram histogram(std::span<const double> values, std::vector<double> edges);

std::vector<double> default_bias_edges();         // -1 .. 1 step 0.2
std::vector<double> default_willingness_edges();  // 0 .. 1 step 0.1
std::vector<double> default_shift_edges();        // -2 .. 2 step 0.4

struct DistributionSummary {
  Histogram bias;
  Histogram willingness;
  std::optional<Histogram> shift;
};

DistributionSummary distribution_summary(std::span<const QuestionMetrics> metrics,
                                         std::span<const ShiftMetrics> shifts);

}  // namespace biaslens
