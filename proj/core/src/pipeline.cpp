#include "biaslens/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>

#include <nlohmann/json.hpp>

#include "biaslens/csv.hpp"
#include "biaslens/report.hpp"
#include "file_io.hpp"

namespace biaslens {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

QuestionBank load_request_bank(const RunRequest& request) {
  if (request.preloaded_bank) return *request.preloaded_bank;
  return QuestionBank::load(request.bank_path);
}

std::string model_name(const ProviderConfig& provider) {
  return provider.model.empty() ? "mock" : provider.model;
}

// Per-question answer values keyed by round; refused outputs are classified
// (they score 0 unless the refusal text carries a stance); failed rounds are
// absent entirely.
std::map<int, std::map<int, int>> answers_by_question(
    const std::vector<ClassifiedRecord>& records) {
  std::map<int, std::map<int, int>> by_question;
  for (const auto& rec : records) {
    by_question[rec.question_id][rec.round] = rec.classification.answer_value;
  }
  return by_question;
}

std::vector<AnswerSeries> series_from_records(
    const std::vector<ClassifiedRecord>& records) {
  std::vector<AnswerSeries> series;
  for (const auto& [qid, rounds] : answers_by_question(records)) {
    AnswerSeries s;
    s.question_id = qid;
    for (const auto& [_, value] : rounds) s.values.push_back(value);
    series.push_back(std::move(s));
  }
  return series;
}

std::vector<ClassifiedRecord> classify_run(const RunStore& store,
                                           const std::string& run_id,
                                           const Classifier& classifier) {
  auto responses = store.read_responses(run_id);
  std::sort(responses.begin(), responses.end(),
            [](const RawResponse& a, const RawResponse& b) {
              return std::tie(a.question_id, a.round) <
                     std::tie(b.question_id, b.round);
            });
  std::vector<ClassifiedRecord> records;
  records.reserve(responses.size());
  for (const auto& r : responses) {
    if (r.outcome == Outcome::kFailed) continue;
    ClassifiedRecord rec;
    rec.question_id = r.question_id;
    rec.round = r.round;
    rec.classification = classifier(r.raw_text);
    records.push_back(std::move(rec));
  }
  return records;
}

Lexicon lexicon_for(const RunRequest& request) {
  if (request.lexicon_override) return *request.lexicon_override;
  return default_lexicon(request.language);
}

std::map<int, double> biases_of_run(const RunStore& store, const std::string& run_id,
                                    const Classifier& classifier) {
  const auto records = classify_run(store, run_id, classifier);
  std::map<int, double> biases;
  for (const auto& [qid, rounds] : answers_by_question(records)) {
    double sum = 0.0;
    for (const auto& [_, value] : rounds) sum += value;
    biases[qid] = sum / static_cast<double>(rounds.size());
  }
  return biases;
}

void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

}  // namespace

std::string sanitize_label(const std::string& label) {
  std::string out;
  out.reserve(label.size());
  for (char c : label) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
    out.push_back(keep ? c : '-');
  }
  return out.empty() ? "run" : out;
}

ValidateOutcome run_validate(const std::filesystem::path& bank_path, bool csv) {
  ValidateOutcome outcome;
  try {
    const auto bank = csv || bank_path.extension() == ".csv"
                          ? QuestionBank::from_csv(bank_path)
                          : QuestionBank::load(bank_path);
    outcome.ok = true;
    outcome.bank_name = bank.metadata().name;
    outcome.bank_version = bank.metadata().version;
    outcome.questions = bank.questions().size();
    outcome.split_pairs = bank.split_pair_count();
    outcome.merged_slots = bank.merged_numbering().size();
    outcome.languages = bank.metadata().languages;
    outcome.warnings = bank.warnings();
  } catch (const ValidationError& ex) {
    outcome.findings = ex.findings();
  } catch (const Error& ex) {
    outcome.findings = {ex.what()};
  }
  return outcome;
}

std::string metrics_csv_text(const RunManifest& manifest,
                             std::span<const QuestionMetrics> metrics,
                             std::span<const ShiftMetrics> shifts) {
  std::map<int, const ShiftMetrics*> shift_by_id;
  for (const auto& s : shifts) shift_by_id[s.question_id] = &s;
  csv::Writer w;
  w.field("question_id").field("language").field("model").field("phase");
  w.field("b").field("variance").field("w").field("strong_neutral").field("s");
  w.end_row();
  for (const auto& m : metrics) {
    w.field(static_cast<long long>(m.question_id));
    w.field(manifest.language);
    w.field(manifest.model);
    w.field(to_string(manifest.phase));
    w.field(m.bias);
    if (m.variance) w.field(*m.variance); else w.empty_field();
    if (m.willingness) {
      w.field(*m.willingness);
      w.field(m.strong_neutral ? "true" : "false");
    } else {
      w.empty_field();
      w.empty_field();
    }
    auto it = shift_by_id.find(m.question_id);
    if (it != shift_by_id.end()) w.field(it->second->shift); else w.empty_field();
    w.end_row();
  }
  return w.str();
}

std::vector<AnswerSeries> answer_series(const RunStore& store,
                                        const std::string& run_id) {
  return series_from_records(store.read_classifications(run_id));
}

std::string execute_run(const RunRequest& request, RunStore& store) {
  const auto bank = load_request_bank(request);
  require(bank.has_language(request.language),
          "bank '" + bank.metadata().name + "' does not carry language '" +
              request.language + "'");
  require(request.rounds >= 1, "rounds must be at least 1");

  auto tmpl = request.template_override
                  ? *request.template_override
                  : default_template(request.language, request.phase);
  tmpl.validate();
  require(tmpl.phase == request.phase, "template phase does not match the run phase");
  require(tmpl.language == request.language,
          "template language does not match the run language");

  const auto model = model_name(request.provider);
  std::string run_id = request.run_id;
  if (run_id.empty()) {
    run_id = std::string(to_string(request.phase)) + "-" + request.language + "-" +
             sanitize_label(model) + "-s" + std::to_string(request.seed);
  }

  std::vector<int> question_ids;
  question_ids.reserve(bank.questions().size());
  for (const auto& q : bank.questions()) question_ids.push_back(q.id);

  // Opposing phase: derive the injected stance per question from the
  // referenced initial run.
  std::map<int, Stance> stances;
  std::map<int, double> initial_bias;
  if (request.phase == Phase::kOpposing) {
    require(request.from_run.has_value(),
            "opposing phase requires the initial run id (--from-run)");
    const auto initial_manifest = store.read_manifest(*request.from_run);
    require(initial_manifest.phase == Phase::kInitial,
            "run '" + *request.from_run + "' is not an initial-phase run");
    require(initial_manifest.language == request.language,
            "initial run language '" + initial_manifest.language +
                "' does not match '" + request.language + "'");
    require(initial_manifest.model == model,
            "initial run model '" + initial_manifest.model + "' does not match '" +
                model + "'");
    require(initial_manifest.bank_name == bank.metadata().name &&
                initial_manifest.bank_version == bank.metadata().version,
            "initial run used bank '" + initial_manifest.bank_name + "' v" +
                initial_manifest.bank_version + ", not this bank");
    require(store.resume_plan(*request.from_run).empty(),
            "initial run '" + *request.from_run + "' is incomplete; finish it first");
    const Classifier classifier(lexicon_for(request), initial_manifest.classify_mode);
    initial_bias = biases_of_run(store, *request.from_run, classifier);
    for (int qid : question_ids) {
      auto it = initial_bias.find(qid);
      require(it != initial_bias.end(),
              "initial run has no scored answers for question " + std::to_string(qid));
      stances[qid] = derive_opposing(it->second);
    }
  }

  if (store.exists(run_id)) {
    // Resume: the frozen manifest must match the request.
    const auto m = store.read_manifest(run_id);
    require(m.model == model && m.language == request.language &&
                m.phase == request.phase && m.n_rounds == request.rounds &&
                m.seed == request.seed &&
                m.provider_kind == std::string(to_string(request.provider.kind)) &&
                m.bank_name == bank.metadata().name &&
                m.bank_version == bank.metadata().version &&
                m.question_ids == question_ids &&
                m.classify_mode == request.classify_mode &&
                m.from_run == request.from_run,
            "run '" + run_id + "' exists with a different configuration");
  } else {
    RunManifest manifest;
    manifest.run_id = run_id;
    manifest.model = model;
    manifest.provider_kind = std::string(to_string(request.provider.kind));
    manifest.language = request.language;
    manifest.phase = request.phase;
    manifest.n_rounds = request.rounds;
    manifest.seed = request.seed;
    manifest.bank_name = bank.metadata().name;
    manifest.bank_version = bank.metadata().version;
    manifest.bank_path = request.bank_path.string();
    manifest.question_ids = question_ids;
    manifest.prompt_template = tmpl;
    manifest.classify_mode = request.classify_mode;
    manifest.decoding_params_json = request.provider.decoding_params_json;
    manifest.created_at = now_iso8601();
    if (request.phase == Phase::kOpposing) {
      manifest.from_run = request.from_run;
      manifest.stances = stances;
      manifest.initial_bias = initial_bias;
    }
    store.create_run(manifest);
  }

  const auto manifest = store.read_manifest(run_id);
  const auto plan = store.resume_plan(run_id);
  if (!plan.empty()) {
    std::vector<BatchItem> items;
    items.reserve(question_ids.size());
    for (const auto& q : bank.questions()) {
      BatchItem item;
      item.question_id = q.id;
      if (request.phase == Phase::kInitial) {
        item.prompt = render_initial(q, manifest.prompt_template);
      } else {
        item.stance = manifest.stances.at(q.id);
        item.prompt = render_opposing(q, manifest.prompt_template, *item.stance);
      }
      items.push_back(std::move(item));
    }
    auto writer = store.open_writer(run_id);
    run_batch_subset(items, request.provider, run_id, request.phase,
                     request.language, manifest.seed, manifest.n_rounds, plan,
                     [&writer](const RawResponse& r) { writer.append(r); });
  }

  // Derived artifacts are rebuilt from the stored responses every time.
  const Classifier classifier(lexicon_for(request), manifest.classify_mode);
  const auto records = classify_run(store, run_id, classifier);
  store.write_classifications(run_id, records);

  const auto series = series_from_records(records);
  const auto metrics = run_metrics(series, manifest.phase);
  std::vector<ShiftMetrics> shifts;
  if (manifest.phase == Phase::kOpposing) {
    for (const auto& m : metrics) {
      auto it = manifest.initial_bias.find(m.question_id);
      if (it == manifest.initial_bias.end()) continue;
      shifts.push_back(make_shift(m.question_id, it->second, m.bias,
                                  manifest.stances.at(m.question_id)));
    }
  }
  store.write_metrics_csv(run_id, metrics_csv_text(manifest, metrics, shifts));
  return run_id;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

namespace {

struct UnitData {
  std::string label;       // "<model> <language>"
  std::string file_label;  // sanitized
  std::string model;
  std::string language;
  std::string initial_run;
  std::optional<std::string> opposing_run;
  std::map<int, QuestionMetrics> initial_metrics;
  std::map<int, ShiftMetrics> shifts;
  std::vector<QuestionMetrics> initial_list;
  std::vector<ShiftMetrics> shift_list;
  RunVectors initial_vectors;
  RunVectors opposing_vectors;
  UnexpectedCounts unexpected_initial;
  UnexpectedCounts unexpected_opposing;
  std::vector<MergedResult> merged;
};

std::array<std::size_t, 4> count_categories(
    const std::vector<ClassifiedRecord>& records) {
  std::array<std::size_t, 4> counts{};
  for (const auto& rec : records) {
    switch (rec.classification.category) {
      case Category::kAffirm: ++counts[0]; break;
      case Category::kNegate: ++counts[1]; break;
      case Category::kNeutral: ++counts[2]; break;
      case Category::kExplainer: ++counts[3]; break;
    }
  }
  return counts;
}

UnexpectedCounts count_unexpected(const std::vector<ClassifiedRecord>& records) {
  std::vector<Classification> classifications;
  classifications.reserve(records.size());
  for (const auto& rec : records) classifications.push_back(rec.classification);
  return tally_unexpected(classifications);
}

std::string matrix_csv(const std::vector<std::string>& labels,
                       const std::vector<std::vector<std::optional<double>>>& cells) {
  csv::Writer w;
  w.field("");
  for (const auto& label : labels) w.field(label);
  w.end_row();
  for (std::size_t r = 0; r < labels.size(); ++r) {
    w.field(labels[r]);
    for (std::size_t c = 0; c < labels.size(); ++c) {
      if (cells[r][c]) w.field(*cells[r][c]); else w.empty_field();
    }
    w.end_row();
  }
  return w.str();
}

}  // namespace

void execute_analyze(const AnalyzeRequest& request) {
  require(!request.run_ids.empty(), "analyze needs at least one run id");
  RunStore store(request.store_root);

  std::vector<RunManifest> manifests;
  manifests.reserve(request.run_ids.size());
  for (const auto& id : request.run_ids) {
    manifests.push_back(store.read_manifest(id));
    require(store.resume_plan(id).empty(),
            "run '" + id + "' is incomplete; resume it before analyzing");
  }
  for (const auto& m : manifests) {
    require(m.bank_name == manifests.front().bank_name &&
                m.bank_version == manifests.front().bank_version,
            "bank mismatch: run '" + m.run_id + "' used '" + m.bank_name + "' v" +
                m.bank_version);
  }

  auto bank_path = request.bank_path;
  if (bank_path.empty()) bank_path = manifests.front().bank_path;
  require(!bank_path.empty(), "no bank path recorded; pass one explicitly");
  const auto bank = QuestionBank::load(bank_path);
  require(bank.metadata().name == manifests.front().bank_name &&
              bank.metadata().version == manifests.front().bank_version,
          "bank file '" + bank_path.string() + "' is not the bank the runs used");

  // Group runs into (model, language) units anchored by the initial run.
  std::map<std::pair<std::string, std::string>, UnitData> units;
  for (const auto& m : manifests) {
    if (m.phase != Phase::kInitial) continue;
    const auto key = std::make_pair(m.model, m.language);
    require(!units.count(key), "two initial runs for model '" + m.model +
                                   "' language '" + m.language +
                                   "'; analyze them separately");
    UnitData unit;
    unit.label = m.model + " " + m.language;
    unit.file_label = sanitize_label(m.model + "_" + m.language);
    unit.model = m.model;
    unit.language = m.language;
    unit.initial_run = m.run_id;
    units.emplace(key, std::move(unit));
  }
  for (const auto& m : manifests) {
    if (m.phase != Phase::kOpposing) continue;
    const auto key = std::make_pair(m.model, m.language);
    auto it = units.find(key);
    require(it != units.end(),
            "opposing run '" + m.run_id + "' has no analyzed initial run");
    require(m.from_run.has_value() && *m.from_run == it->second.initial_run,
            "opposing run '" + m.run_id + "' references initial run '" +
                m.from_run.value_or("?") + "', which is not analyzed here");
    require(!it->second.opposing_run.has_value(),
            "two opposing runs for model '" + m.model + "' language '" + m.language +
                "'");
    it->second.opposing_run = m.run_id;
  }

  for (auto& [_, unit] : units) {
    const auto initial_records = store.read_classifications(unit.initial_run);
    require(!initial_records.empty(),
            "run '" + unit.initial_run + "' has no classifications");
    const auto manifest = store.read_manifest(unit.initial_run);
    unit.initial_list = run_metrics(series_from_records(initial_records),
                                    Phase::kInitial);
    for (const auto& m : unit.initial_list) unit.initial_metrics[m.question_id] = m;
    unit.unexpected_initial = count_unexpected(initial_records);
    unit.initial_vectors.label = unit.label;
    unit.initial_vectors.category_counts = count_categories(initial_records);
    for (const auto& m : unit.initial_list) {
      unit.initial_vectors.bias[m.question_id] = m.bias;
      if (m.willingness) unit.initial_vectors.willingness[m.question_id] = *m.willingness;
    }

    if (unit.opposing_run) {
      const auto opposing_manifest = store.read_manifest(*unit.opposing_run);
      const auto opposing_records = store.read_classifications(*unit.opposing_run);
      require(!opposing_records.empty(),
              "run '" + *unit.opposing_run + "' has no classifications");
      const auto opposing_metrics =
          run_metrics(series_from_records(opposing_records), Phase::kOpposing);
      for (const auto& m : opposing_metrics) {
        auto it = opposing_manifest.initial_bias.find(m.question_id);
        if (it == opposing_manifest.initial_bias.end()) continue;
        const auto shift =
            make_shift(m.question_id, it->second, m.bias,
                       opposing_manifest.stances.at(m.question_id));
        unit.shifts[m.question_id] = shift;
        unit.shift_list.push_back(shift);
      }
      unit.unexpected_opposing = count_unexpected(opposing_records);
      unit.opposing_vectors.label = unit.label;
      unit.opposing_vectors.category_counts = count_categories(opposing_records);
      for (const auto& m : opposing_metrics) {
        unit.opposing_vectors.bias[m.question_id] = m.bias;
        if (m.willingness) {
          unit.opposing_vectors.willingness[m.question_id] = *m.willingness;
        }
      }
      for (const auto& [qid, shift] : unit.shifts) {
        unit.opposing_vectors.shift[qid] = shift.shift;
      }
    }

    unit.merged = merged_results(bank, unit.initial_metrics, unit.shifts);
  }

  // ---- write the analysis directory.
  const auto out = request.out_dir;
  std::filesystem::create_directories(out / "distributions");
  std::vector<const UnitData*> ordered;
  ordered.reserve(units.size());
  for (const auto& [_, unit] : units) ordered.push_back(&unit);
  std::sort(ordered.begin(), ordered.end(),
            [](const UnitData* a, const UnitData* b) { return a->label < b->label; });

  // slots.csv: slot id, genre, display text.
  {
    std::string display = request.display_language;
    if (!bank.has_language(display)) display = bank.metadata().languages.front();
    csv::Writer w;
    w.field("slot_id").field("genre").field("question").end_row();
    for (const auto& slot : bank.merged_numbering()) {
      const auto& q = bank.by_id(slot.question_a);
      w.field(static_cast<long long>(slot.slot_id));
      w.field(slot.genre);
      w.field(q.text(display));
      w.end_row();
    }
    detail::write_file_atomic(out / "slots.csv", w.str());
  }

  // merged_<label>.csv per unit.
  for (const auto* unit : ordered) {
    csv::Writer w;
    w.field("slot_id").field("pair_id").field("b").field("w").field("s");
    w.field("strong_neutral").field("b_a").field("b_b").field("s_a").field("s_b");
    w.end_row();
    for (const auto& m : unit->merged) {
      w.field(static_cast<long long>(m.slot_id));
      if (m.pair_id) w.field(static_cast<long long>(*m.pair_id)); else w.empty_field();
      w.field(m.bias);
      if (m.willingness) w.field(*m.willingness); else w.empty_field();
      if (m.shift) w.field(*m.shift); else w.empty_field();
      w.field(m.strong_neutral ? "true" : "false");
      if (m.bias_a) w.field(*m.bias_a); else w.empty_field();
      if (m.bias_b) w.field(*m.bias_b); else w.empty_field();
      if (m.shift_a) w.field(*m.shift_a); else w.empty_field();
      if (m.shift_b) w.field(*m.shift_b); else w.empty_field();
      w.end_row();
    }
    detail::write_file_atomic(out / ("merged_" + unit->file_label + ".csv"), w.str());
  }

  // unexpected_counts.csv.
  {
    csv::Writer w;
    w.field("run").field("phase").field("explainer").field("neutral").field("total");
    w.end_row();
    for (const auto* unit : ordered) {
      w.field(unit->label).field("initial");
      w.field(static_cast<long long>(unit->unexpected_initial.explainer));
      w.field(static_cast<long long>(unit->unexpected_initial.neutral));
      w.field(static_cast<long long>(unit->unexpected_initial.total));
      w.end_row();
      if (unit->opposing_run) {
        w.field(unit->label).field("opposing");
        w.field(static_cast<long long>(unit->unexpected_opposing.explainer));
        w.field(static_cast<long long>(unit->unexpected_opposing.neutral));
        w.field(static_cast<long long>(unit->unexpected_opposing.total));
        w.end_row();
      }
    }
    detail::write_file_atomic(out / "unexpected_counts.csv", w.str());
  }

  // distributions per unit.
  for (const auto* unit : ordered) {
    const auto summary =
        distribution_summary(unit->initial_list, unit->shift_list);
    detail::write_file_atomic(
        out / "distributions" / (unit->file_label + "_bias.csv"),
        histogram_csv(summary.bias));
    detail::write_file_atomic(
        out / "distributions" / (unit->file_label + "_willingness.csv"),
        histogram_csv(summary.willingness));
    if (summary.shift) {
      detail::write_file_atomic(
          out / "distributions" / (unit->file_label + "_shift.csv"),
          histogram_csv(*summary.shift));
    }
    // Split-only merged-bias view.
    std::vector<double> split_bias;
    for (const auto& m : unit->merged) {
      if (m.pair_id) split_bias.push_back(m.bias);
    }
    if (!split_bias.empty()) {
      detail::write_file_atomic(
          out / "distributions" / (unit->file_label + "_split_merged_bias.csv"),
          histogram_csv(histogram(split_bias, default_bias_edges())));
    }
  }

  // Pairwise statistics (two or more units only).
  const std::size_t n = ordered.size();
  std::vector<std::string> labels;
  for (const auto* unit : ordered) labels.push_back(unit->label);
  if (n >= 2) {
    auto empty_matrix = [n] {
      return std::vector<std::vector<std::optional<double>>>(
          n, std::vector<std::optional<double>>(n));
    };
    auto r_bias = empty_matrix();
    auto r_will = empty_matrix();
    auto r_shift = empty_matrix();
    std::map<std::string, std::vector<std::vector<std::optional<double>>>> chisq_p;
    csv::Writer detail_rows;
    detail_rows.field("factor").field("phase").field("run_a").field("run_b");
    detail_rows.field("chi2").field("dof").field("p").end_row();

    auto factor_requested = [&](ChiSquareFactor f) {
      return std::find(request.factors.begin(), request.factors.end(), f) !=
             request.factors.end();
    };

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto& a = *ordered[i];
        const auto& b = *ordered[j];
        std::vector<ChiSquareFactor> initial_factors;
        if (factor_requested(ChiSquareFactor::kResponseCategory)) {
          initial_factors.push_back(ChiSquareFactor::kResponseCategory);
        }
        if (factor_requested(ChiSquareFactor::kBiasSign)) {
          initial_factors.push_back(ChiSquareFactor::kBiasSign);
        }
        const auto initial_cmp =
            compare_runs(a.initial_vectors, b.initial_vectors, initial_factors);
        r_bias[i][j] = initial_cmp.correlation.r_bias;
        r_will[i][j] = initial_cmp.correlation.r_willingness;
        for (const auto& report : initial_cmp.chi_square) {
          const auto key =
              std::string(to_string(report.factor)) + "_initial";
          if (!chisq_p.count(key)) chisq_p[key] = empty_matrix();
          chisq_p[key][i][j] = report.p;
          if (i < j) {
            detail_rows.field(to_string(report.factor)).field("initial");
            detail_rows.field(a.label).field(b.label);
            detail_rows.field(report.chi2);
            detail_rows.field(static_cast<long long>(report.dof));
            detail_rows.field(report.p).end_row();
          }
        }
        if (a.opposing_run && b.opposing_run) {
          std::vector<ChiSquareFactor> opposing_factors;
          if (factor_requested(ChiSquareFactor::kResponseCategory)) {
            opposing_factors.push_back(ChiSquareFactor::kResponseCategory);
          }
          if (factor_requested(ChiSquareFactor::kShiftDirection)) {
            opposing_factors.push_back(ChiSquareFactor::kShiftDirection);
          }
          const auto opposing_cmp = compare_runs(a.opposing_vectors,
                                                 b.opposing_vectors,
                                                 opposing_factors);
          r_shift[i][j] = opposing_cmp.correlation.r_shift;
          for (const auto& report : opposing_cmp.chi_square) {
            const auto key =
                std::string(to_string(report.factor)) + "_opposing";
            if (!chisq_p.count(key)) chisq_p[key] = empty_matrix();
            chisq_p[key][i][j] = report.p;
            if (i < j) {
              detail_rows.field(to_string(report.factor)).field("opposing");
              detail_rows.field(a.label).field(b.label);
              detail_rows.field(report.chi2);
              detail_rows.field(static_cast<long long>(report.dof));
              detail_rows.field(report.p).end_row();
            }
          }
        }
      }
    }
    detail::write_file_atomic(out / "correlation_bias.csv",
                              matrix_csv(labels, r_bias));
    detail::write_file_atomic(out / "correlation_willingness.csv",
                              matrix_csv(labels, r_will));
    bool any_shift = false;
    for (const auto& row : r_shift) {
      for (const auto& cell : row) any_shift = any_shift || cell.has_value();
    }
    if (any_shift) {
      detail::write_file_atomic(out / "correlation_shift.csv",
                                matrix_csv(labels, r_shift));
    }
    for (const auto& [key, matrix] : chisq_p) {
      detail::write_file_atomic(out / ("chisq_" + sanitize_label(key) + "_p.csv"),
                                matrix_csv(labels, matrix));
    }
    detail::write_file_atomic(out / "chisq_detail.csv", detail_rows.str());
  }

  // analysis.json index.
  {
    ordered_json j;
    j["bank"] = {{"name", bank.metadata().name},
                 {"version", bank.metadata().version},
                 {"path", bank_path.string()}};
    std::string display = request.display_language;
    if (!bank.has_language(display)) display = bank.metadata().languages.front();
    j["display_language"] = display;
    auto factors = ordered_json::array();
    for (const auto f : request.factors) factors.push_back(std::string(to_string(f)));
    j["factors"] = std::move(factors);
    auto units_json = ordered_json::array();
    for (const auto* unit : ordered) {
      ordered_json u;
      u["label"] = unit->label;
      u["file_label"] = unit->file_label;
      u["model"] = unit->model;
      u["language"] = unit->language;
      u["initial_run"] = unit->initial_run;
      if (unit->opposing_run) u["opposing_run"] = *unit->opposing_run;
      units_json.push_back(std::move(u));
    }
    j["units"] = std::move(units_json);
    detail::write_file_atomic(out / "analysis.json", j.dump(2) + "\n");
  }
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

namespace {

struct AnalysisIndexUnit {
  std::string label;
  std::string file_label;
  bool has_opposing = false;
};

std::optional<double> parse_cell(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return std::stod(cell);
}

MatrixTable read_matrix(const std::filesystem::path& path, const std::string& title,
                        bool mark) {
  const auto rows = csv::parse(detail::read_file(path));
  MatrixTable matrix;
  matrix.title = title;
  matrix.mark_below_005 = mark;
  if (rows.empty()) return matrix;
  for (std::size_t c = 1; c < rows.front().size(); ++c) {
    matrix.labels.push_back(rows.front()[c]);
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::vector<std::optional<double>> cells;
    for (std::size_t c = 1; c < rows[r].size(); ++c) {
      cells.push_back(parse_cell(rows[r][c]));
    }
    matrix.values.push_back(std::move(cells));
  }
  return matrix;
}

}  // namespace

void execute_report(const ReportRequest& request) {
  const auto dir = request.analysis_dir;
  const auto index_path = dir / "analysis.json";
  if (!std::filesystem::exists(index_path)) {
    throw StorageError("analysis directory '" + dir.string() +
                       "' lacks analysis.json (expected analysis.json, slots.csv, "
                       "merged_<run>.csv, unexpected_counts.csv)");
  }
  ordered_json index;
  try {
    index = ordered_json::parse(detail::read_file(index_path));
  } catch (const ordered_json::exception& ex) {
    throw ParseError(std::string("analysis.json malformed: ") + ex.what());
  }

  std::vector<AnalysisIndexUnit> units;
  for (const auto& u : index.at("units")) {
    AnalysisIndexUnit unit;
    unit.label = u.at("label").get<std::string>();
    unit.file_label = u.at("file_label").get<std::string>();
    unit.has_opposing = u.contains("opposing_run");
    units.push_back(std::move(unit));
  }
  if (units.empty()) throw StorageError("analysis.json lists no units");

  std::vector<std::string> missing;
  auto need = [&](const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) missing.push_back(p.filename().string());
    return p;
  };
  const auto slots_path = need(dir / "slots.csv");
  const auto unexpected_path = need(dir / "unexpected_counts.csv");
  std::vector<std::filesystem::path> merged_paths;
  for (const auto& unit : units) {
    merged_paths.push_back(need(dir / ("merged_" + unit.file_label + ".csv")));
  }
  if (!missing.empty()) {
    std::string joined;
    for (const auto& m : missing) {
      if (!joined.empty()) joined += ", ";
      joined += m;
    }
    throw StorageError("analysis directory is missing: " + joined);
  }

  ReportInput input;
  input.title = request.title;
  for (const auto& unit : units) {
    input.columns.push_back(ReportColumn{unit.label, unit.has_opposing});
  }

  // Rows from slots.csv, cells from each unit's merged CSV.
  struct MergedCells {
    std::map<int, double> bias;
    std::map<int, bool> strong_neutral;
    std::map<int, double> shift;
  };
  std::vector<MergedCells> cells(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto rows = csv::parse(detail::read_file(merged_paths[u]));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      const int slot = std::stoi(row[0]);
      cells[u].bias[slot] = std::stod(row[2]);
      cells[u].strong_neutral[slot] = row[5] == "true";
      if (!row[4].empty()) cells[u].shift[slot] = std::stod(row[4]);
    }
  }
  const auto slot_rows = csv::parse(detail::read_file(slots_path));
  for (std::size_t r = 1; r < slot_rows.size(); ++r) {
    const auto& row = slot_rows[r];
    ReportRow out_row;
    out_row.slot_id = std::stoi(row[0]);
    out_row.genre = row[1];
    out_row.question = row[2];
    out_row.highlight = request.highlight_slots.count(out_row.slot_id) > 0;
    for (std::size_t u = 0; u < units.size(); ++u) {
      auto bias_it = cells[u].bias.find(out_row.slot_id);
      out_row.bias.push_back(bias_it == cells[u].bias.end()
                                 ? std::nullopt
                                 : std::optional<double>(bias_it->second));
      auto sn_it = cells[u].strong_neutral.find(out_row.slot_id);
      out_row.strong_neutral.push_back(sn_it != cells[u].strong_neutral.end() &&
                                       sn_it->second);
      auto shift_it = cells[u].shift.find(out_row.slot_id);
      out_row.shift.push_back(shift_it == cells[u].shift.end()
                                  ? std::nullopt
                                  : std::optional<double>(shift_it->second));
    }
    input.rows.push_back(std::move(out_row));
  }

  // Optional matrices.
  auto add_matrix = [&](const std::string& file, const std::string& title,
                        bool mark) {
    const auto path = dir / file;
    if (std::filesystem::exists(path)) {
      input.matrices.push_back(read_matrix(path, title, mark));
    }
  };
  add_matrix("correlation_bias.csv", "Correlation (bias)", false);
  add_matrix("correlation_willingness.csv", "Correlation (willingness)", false);
  add_matrix("correlation_shift.csv", "Correlation (bias shift)", false);
  add_matrix("chisq_category_initial_p.csv",
             "Chi-square p-values (response category, initial)", true);
  add_matrix("chisq_category_opposing_p.csv",
             "Chi-square p-values (response category, opposing)", true);
  add_matrix("chisq_bias-sign_initial_p.csv",
             "Chi-square p-values (bias sign, initial)", true);
  add_matrix("chisq_shift-direction_opposing_p.csv",
             "Chi-square p-values (shift direction, opposing)", true);

  // Unexpected-output counts.
  const auto unexpected_rows = csv::parse(detail::read_file(unexpected_path));
  for (std::size_t r = 1; r < unexpected_rows.size(); ++r) {
    const auto& row = unexpected_rows[r];
    UnexpectedRow u;
    u.label = row[0];
    u.phase = parse_phase(row[1]);
    u.explainer = static_cast<std::size_t>(std::stoull(row[2]));
    u.neutral = static_cast<std::size_t>(std::stoull(row[3]));
    u.total = static_cast<std::size_t>(std::stoull(row[4]));
    input.unexpected.push_back(std::move(u));
  }

  const auto docs = render_table(input);
  std::filesystem::create_directories(request.out_dir / "distributions");
  detail::write_file_atomic(request.out_dir / "report.md", docs.markdown);
  detail::write_file_atomic(request.out_dir / "report.html", docs.html);
  detail::write_file_atomic(request.out_dir / "report.csv", docs.csv);

  const auto dist_dir = dir / "distributions";
  if (std::filesystem::exists(dist_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(dist_dir)) {
      if (!entry.is_regular_file()) continue;
      detail::write_file_atomic(request.out_dir / "distributions" /
                                    entry.path().filename(),
                                detail::read_file(entry.path()));
    }
  }
}

}  // namespace biaslens
