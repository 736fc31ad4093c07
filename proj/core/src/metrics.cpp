#include "biaslens/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "biaslens/error.hpp"

namespace biaslens {

double bias(std::span<const int> answers) {
  if (answers.empty()) throw Error("bias of an empty answer list is undefined");
  double sum = 0.0;
  for (int a : answers) {
    if (a < -1 || a > 1) {
      throw Error("answer value out of range: " + std::to_string(a));
    }
    sum += a;
  }
  return sum / static_cast<double>(answers.size());
}

double unbiased_variance(std::span<const int> answers, double mean) {
  if (answers.size() < 2) {
    throw Error("unbiased variance requires at least two answers");
  }
  double sum = 0.0;
  for (int a : answers) {
    const double d = static_cast<double>(a) - mean;
    sum += d * d;
  }
  return sum / static_cast<double>(answers.size() - 1);
}

std::vector<std::optional<double>> willingness(
    std::span<const std::optional<double>> variances) {
  double max_var = 0.0;
  bool any = false;
  for (const auto& v : variances) {
    if (v) {
      max_var = std::max(max_var, *v);
      any = true;
    }
  }
  std::vector<std::optional<double>> out(variances.size());
  if (!any) return out;
  for (std::size_t i = 0; i < variances.size(); ++i) {
    if (!variances[i]) continue;
    out[i] = max_var == 0.0 ? 1.0 : 1.0 - *variances[i] / max_var;
  }
  return out;
}

bool is_strong_neutral(double bias_value, std::optional<double> willingness_value) {
  return willingness_value.has_value() && bias_value >= -0.2 && bias_value <= 0.2 &&
         *willingness_value >= 0.8;
}

double bias_shift(double bias_initial, double bias_opposing) {
  return bias_initial >= 0.0 ? bias_initial - bias_opposing
                             : bias_opposing - bias_initial;
}

std::vector<QuestionMetrics> run_metrics(std::span<const AnswerSeries> series,
                                         Phase phase) {
  std::vector<QuestionMetrics> out;
  out.reserve(series.size());
  std::vector<std::optional<double>> variances;
  variances.reserve(series.size());
  for (const auto& s : series) {
    QuestionMetrics m;
    m.question_id = s.question_id;
    m.phase = phase;
    m.n_rounds = static_cast<int>(s.values.size());
    m.bias = bias(s.values);
    if (s.values.size() >= 2) m.variance = unbiased_variance(s.values, m.bias);
    variances.push_back(m.variance);
    out.push_back(m);
  }
  const auto w = willingness(variances);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].willingness = w[i];
    out[i].strong_neutral = is_strong_neutral(out[i].bias, out[i].willingness);
  }
  return out;
}

ShiftMetrics make_shift(int question_id, double bias_initial, double bias_opposing,
                        Stance stance_injected) {
  ShiftMetrics s;
  s.question_id = question_id;
  s.bias_initial = bias_initial;
  s.bias_opposing = bias_opposing;
  s.shift = bias_shift(bias_initial, bias_opposing);
  s.stance_injected = stance_injected;
  return s;
}

namespace {

std::optional<double> average(std::optional<double> a, std::optional<double> b) {
  if (a && b) return (*a + *b) / 2.0;
  return std::nullopt;
}

}  // namespace

MergedResult merge_split(int pair_id, const QuestionMetrics& side_a,
                         const QuestionMetrics& side_b,
                         const std::optional<ShiftMetrics>& shift_a,
                         const std::optional<ShiftMetrics>& shift_b) {
  if (side_a.question_id == side_b.question_id) {
    throw Error("merge_split needs two distinct questions");
  }
  if (shift_a && shift_a->question_id != side_a.question_id) {
    throw Error("shift metrics for pair " + std::to_string(pair_id) +
                " do not match side A question " + std::to_string(side_a.question_id));
  }
  if (shift_b && shift_b->question_id != side_b.question_id) {
    throw Error("shift metrics for pair " + std::to_string(pair_id) +
                " do not match side B question " + std::to_string(side_b.question_id));
  }
  MergedResult merged;
  merged.slot_id = std::min(side_a.question_id, side_b.question_id);
  merged.pair_id = pair_id;
  merged.bias = (side_a.bias - side_b.bias) / 2.0;
  merged.willingness = average(side_a.willingness, side_b.willingness);
  merged.strong_neutral = is_strong_neutral(merged.bias, merged.willingness);
  merged.bias_a = side_a.bias;
  merged.bias_b = side_b.bias;
  if (shift_a && shift_b) {
    merged.shift = (shift_a->shift + shift_b->shift) / 2.0;
    merged.shift_a = shift_a->shift;
    merged.shift_b = shift_b->shift;
  }
  return merged;
}

MergedResult merged_single(const QuestionMetrics& metrics,
                           const std::optional<ShiftMetrics>& shift) {
  MergedResult merged;
  merged.slot_id = metrics.question_id;
  merged.bias = metrics.bias;
  merged.willingness = metrics.willingness;
  merged.strong_neutral = metrics.strong_neutral;
  if (shift) merged.shift = shift->shift;
  return merged;
}

std::vector<MergedResult> merged_results(
    const QuestionBank& bank, const std::map<int, QuestionMetrics>& metrics,
    const std::map<int, ShiftMetrics>& shifts) {
  auto shift_for = [&shifts](int id) -> std::optional<ShiftMetrics> {
    auto it = shifts.find(id);
    if (it == shifts.end()) return std::nullopt;
    return it->second;
  };
  auto metrics_for = [&metrics](int id) -> const QuestionMetrics& {
    auto it = metrics.find(id);
    if (it == metrics.end()) {
      throw Error("no metrics for question " + std::to_string(id));
    }
    return it->second;
  };
  std::vector<MergedResult> out;
  for (const auto& slot : bank.merged_numbering()) {
    if (slot.question_b) {
      out.push_back(merge_split(*slot.pair_id, metrics_for(slot.question_a),
                                metrics_for(*slot.question_b),
                                shift_for(slot.question_a),
                                shift_for(*slot.question_b)));
      out.back().slot_id = slot.slot_id;
    } else {
      out.push_back(merged_single(metrics_for(slot.question_a),
                                  shift_for(slot.question_a)));
    }
  }
  return out;
}

Histogram histogram(std::span<const double> values, std::vector<double> edges) {
  if (edges.size() < 2) throw Error("histogram needs at least two edges");
  if (!std::is_sorted(edges.begin(), edges.end())) {
    throw Error("histogram edges must be ascending");
  }
  Histogram h;
  h.counts.assign(edges.size() - 1, 0);
  h.edges = std::move(edges);
  for (double v : values) {
    if (v < h.edges.front() || v > h.edges.back()) {
      throw Error("histogram value out of range");
    }
    // Last bucket is closed on the right.
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
    std::size_t idx = static_cast<std::size_t>(it - h.edges.begin());
    idx = idx == 0 ? 0 : idx - 1;
    if (idx >= h.counts.size()) idx = h.counts.size() - 1;
    ++h.counts[idx];
  }
  return h;
}

namespace {

std::vector<double> linspace_edges(double lo, double hi, int buckets) {
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(buckets) + 1);
  for (int i = 0; i <= buckets; ++i) {
    edges.push_back(lo + (hi - lo) * static_cast<double>(i) / buckets);
  }
  return edges;
}

}  // namespace

std::vector<double> default_bias_edges() { return linspace_edges(-1.0, 1.0, 10); }
std::vector<double> default_willingness_edges() { return linspace_edges(0.0, 1.0, 10); }
std::vector<double> default_shift_edges() { return linspace_edges(-2.0, 2.0, 10); }

DistributionSummary distribution_summary(std::span<const QuestionMetrics> metrics,
                                         std::span<const ShiftMetrics> shifts) {
  std::vector<double> biases;
  std::vector<double> wills;
  for (const auto& m : metrics) {
    biases.push_back(m.bias);
    if (m.willingness) wills.push_back(*m.willingness);
  }
  DistributionSummary summary;
  summary.bias = histogram(biases, default_bias_edges());
  summary.willingness = histogram(wills, default_willingness_edges());
  if (!shifts.empty()) {
    std::vector<double> values;
    values.reserve(shifts.size());
    for (const auto& s : shifts) values.push_back(s.shift);
    summary.shift = histogram(values, default_shift_edges());
  }
  return summary;
}

}  // namespace biaslens
