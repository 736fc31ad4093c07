#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "biaslens/bank.hpp"
#include "biaslens/classify.hpp"
#include "biaslens/metrics.hpp"
#include "biaslens/prompt.hpp"
#include "biaslens/provider.hpp"
#include "biaslens/stats.hpp"
#include "biaslens/store.hpp"

namespace biaslens {

// ---- validate ----

struct ValidateOutcome {
  bool ok = false;
  std::string bank_name;
  std::string bank_version;
  std::size_t questions = 0;
  std::size_t split_pairs = 0;
  std::size_t merged_slots = 0;
  std::vector<std::string> languages;
  std::vector<std::string> warnings;
  std::vector<std::string> findings;  // non-empty when !ok
};

ValidateOutcome run_validate(const std::filesystem::path& bank_path, bool csv = false);

// ---- run ----

struct RunRequest {
  std::filesystem::path bank_path;
  std::optional<QuestionBank> preloaded_bank;  // used instead of bank_path
  ProviderConfig provider;
  std::string language;
  Phase phase = Phase::kInitial;
  int rounds = 10;
  std::uint64_t seed = 0;
  std::string run_id;                    // empty: derived from the request
  std::optional<std::string> from_run;   // required for the opposing phase
  ClassifyMode classify_mode = ClassifyMode::kLenient;
  std::optional<PromptTemplate> template_override;
  std::optional<Lexicon> lexicon_override;
};

// Executes (or resumes) one run: collects responses, classifies them, writes
// metrics.csv. Returns the run id.
std::string execute_run(const RunRequest& request, RunStore& store);

// Derived per-question answer series of a stored run, classification-backed.
std::vector<AnswerSeries> answer_series(const RunStore& store,
                                        const std::string& run_id);

// ---- analyze ----

struct AnalyzeRequest {
  std::filesystem::path store_root;
  std::vector<std::string> run_ids;
  std::filesystem::path out_dir;
  std::filesystem::path bank_path;       // empty: taken from the manifests
  std::vector<ChiSquareFactor> factors = {ChiSquareFactor::kResponseCategory};
  std::string display_language = "en";
};

void execute_analyze(const AnalyzeRequest& request);

// ---- report ----

struct ReportRequest {
  std::filesystem::path analysis_dir;
  std::filesystem::path out_dir;
  std::set<int> highlight_slots;
  std::string title = "Evaluation report";
};

void execute_report(const ReportRequest& request);

// Per-run metrics CSV content (stable column order):
// question_id,language,model,phase,b,variance,w,strong_neutral,s
std::string metrics_csv_text(const RunManifest& manifest,
                             std::span<const QuestionMetrics> metrics,
                             std::span<const ShiftMetrics> shifts);

std::string sanitize_label(const std::string& label);

}  // namespace biaslens
