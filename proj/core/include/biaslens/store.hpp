#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "biaslens/classify.hpp"
#include "biaslens/prompt.hpp"
#include "biaslens/types.hpp"

namespace biaslens {

// Frozen description of one evaluation run; immutable once the run starts.
struct RunManifest {
  std::string run_id;
  std::string model;
  std::string provider_kind;
  std::string language;
  Phase phase = Phase::kInitial;
  int n_rounds = 10;
  std::uint64_t seed = 0;
  std::string bank_name;
  std::string bank_version;
  std::string bank_path;          // provenance only; runs never re-read it
  std::vector<int> question_ids;  // run domain, ascending
  PromptTemplate prompt_template;
  ClassifyMode classify_mode = ClassifyMode::kLenient;
  std::string decoding_params_json = "{}";
  std::string created_at;
  // Opposing-phase provenance: the referenced initial run, the injected
  // stance per question, and the phase-1 bias it was derived from.
  std::optional<std::string> from_run;
  std::map<int, Stance> stances;
  std::map<int, double> initial_bias;
};

struct RawResponse {
  std::string run_id;
  int question_id = 0;
  int round = 0;  // 1..n_rounds
  std::string prompt;
  std::string raw_text;
  double latency_ms = 0.0;
  int attempts = 1;
  Outcome outcome = Outcome::kOk;
};

struct ClassifiedRecord {
  int question_id = 0;
  int round = 0;
  Classification classification;
};

// Directory layout: <root>/runs/<run_id>/{manifest.json, responses.jsonl,
// classifications.jsonl, metrics.csv}. Responses are append-only,
// line-delimited JSON flushed per record; one writer per run.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path run_dir(const std::string& run_id) const;
  bool exists(const std::string& run_id) const;
  std::vector<std::string> list_runs() const;

  void create_run(const RunManifest& manifest);
  RunManifest read_manifest(const std::string& run_id) const;

  class Writer {
   public:
    // Appends durably; rejects duplicate (run, question, round).
    void append(const RawResponse& response);
    std::size_t appended() const { return seen_.size(); }

   private:
    friend class RunStore;
    Writer(std::filesystem::path path, std::string run_id,
           std::set<std::pair<int, int>> seen);
    std::ofstream out_;
    std::string run_id_;
    std::set<std::pair<int, int>> seen_;
  };

  Writer open_writer(const std::string& run_id);

  std::vector<RawResponse> read_responses(const std::string& run_id) const;

  // (question, round) pairs with no ok/refused record yet; empty when the
  // run is complete.
  std::vector<std::pair<int, int>> resume_plan(const std::string& run_id) const;

  void write_classifications(const std::string& run_id,
                             const std::vector<ClassifiedRecord>& records);
  std::vector<ClassifiedRecord> read_classifications(const std::string& run_id) const;

  void write_metrics_csv(const std::string& run_id, const std::string& csv_text);
  std::string read_metrics_csv(const std::string& run_id) const;

 private:
  std::filesystem::path root_;
};

std::string manifest_to_json_text(const RunManifest& manifest);
RunManifest manifest_from_json_text(const std::string& json_text);

std::string response_to_json_line(const RawResponse& response);
RawResponse response_from_json_line(const std::string& line);

}  // namespace biaslens
