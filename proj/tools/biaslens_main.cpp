// biaslens: two-phase yes/no opinion surveys against LLM endpoints.
//
//   biaslens validate --bank questions.json
//   biaslens run --bank questions.json --provider mock --language en
//       --phase initial --rounds 10 --seed 42 --out work/
//   biaslens run --bank questions.json --provider mock --language en
//       --phase opposing --from-run <initial-run-id> --seed 42 --out work/
//   biaslens analyze <run-id>... --out work/
//   biaslens report --out work/

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "biaslens/pipeline.hpp"

namespace {

using namespace biaslens;

int cmd_validate(const std::string& bank_path, bool csv) {
  const auto outcome = run_validate(bank_path, csv);
  for (const auto& warning : outcome.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
  if (!outcome.ok) {
    for (const auto& finding : outcome.findings) {
      std::cerr << "error: " << finding << "\n";
    }
    return 1;
  }
  std::ostringstream langs;
  for (std::size_t i = 0; i < outcome.languages.size(); ++i) {
    if (i) langs << ", ";
    langs << outcome.languages[i];
  }
  std::cout << "bank '" << outcome.bank_name << "' v" << outcome.bank_version
            << ": " << outcome.questions << " questions, " << outcome.split_pairs
            << " pairs, " << outcome.merged_slots << " merged slots; languages: "
            << langs.str() << "\n";
  return 0;
}

std::vector<int> parse_backoff(const std::string& spec) {
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    out.push_back(std::stoi(part));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-phase binary-choice opinion surveys for LLM endpoints"};
  app.require_subcommand(1);

  // ---- validate ----
  std::string validate_bank;
  bool validate_csv = false;
  auto* validate = app.add_subcommand("validate", "Validate a question bank");
  validate->add_option("--bank", validate_bank, "Bank file (JSON, or CSV with --csv)")
      ->required();
  validate->add_flag("--csv", validate_csv, "Treat the bank file as CSV rows");

  // ---- run ----
  RunRequest run_request;
  std::string run_bank, run_phase = "initial", run_classify_mode = "lenient";
  std::string run_provider = "mock", run_out = ".", run_from, run_template;
  std::string run_mock_policy = "always-affirm", run_mock_scripted, run_lexicon;
  std::string run_backoff;
  double run_rps = 0.0;
  auto* run = app.add_subcommand("run", "Execute one (model, language, phase) run");
  run->add_option("--bank", run_bank, "Question bank JSON")->required();
  run->add_option("--provider", run_provider,
                  "Provider kind: mock | openai | gemini")->required();
  run->add_option("--model", run_request.provider.model, "Model name");
  run->add_option("--language", run_request.language, "Language code")->required();
  run->add_option("--phase", run_phase, "initial | opposing")
      ->check(CLI::IsMember({"initial", "opposing"}));
  run->add_option("--rounds", run_request.rounds, "Rounds per question")
      ->default_val(10);
  run->add_option("--seed", run_request.seed, "Run seed")->default_val(0);
  run->add_option("--from-run", run_from,
                  "Initial run id (required for the opposing phase)");
  run->add_option("--classify-mode", run_classify_mode, "lenient | strict")
      ->check(CLI::IsMember({"lenient", "strict"}));
  run->add_option("--out", run_out, "Workspace root (runs/ lives here)");
  run->add_option("--run-id", run_request.run_id, "Explicit run id");
  run->add_option("--endpoint", run_request.provider.endpoint,
                  "Provider base URL, e.g. https://api.openai.com/v1");
  run->add_option("--credentials-env", run_request.provider.credentials_env,
                  "Name of the environment variable holding the API key");
  run->add_option("--rps", run_rps, "Request rate limit per second");
  run->add_option("--max-attempts", run_request.provider.retry.max_attempts,
                  "Attempts per request");
  run->add_option("--backoff", run_backoff, "Retry backoff schedule, ms (comma list)");
  run->add_option("--max-in-flight", run_request.provider.max_in_flight,
                  "Concurrent request cap");
  run->add_option("--decoding-params", run_request.provider.decoding_params_json,
                  "JSON object passed through to the provider");
  run->add_option("--template", run_template, "Prompt template JSON file");
  run->add_option("--lexicon", run_lexicon, "Classifier lexicon JSON file");
  run->add_option("--mock-policy", run_mock_policy,
                  "always-affirm | always-negate | sycophant | stubborn | "
                  "explainer-rate | scripted");
  run->add_option("--mock-explainer-rate", run_request.provider.mock.explainer_rate,
                  "Hedge probability for the explainer-rate mock");
  run->add_option("--mock-seed", run_request.provider.mock.seed, "Mock answer seed");
  run->add_option("--mock-scripted", run_mock_scripted,
                  "JSON file mapping prompt hashes to scripted outputs");

  // ---- analyze ----
  AnalyzeRequest analyze_request;
  std::vector<std::string> analyze_runs;
  std::vector<std::string> analyze_factors = {"category"};
  std::string analyze_out = ".", analyze_bank;
  auto* analyze = app.add_subcommand("analyze", "Compute metrics and statistics");
  analyze->add_option("runs", analyze_runs, "Run ids to analyze")->required();
  analyze->add_option("--out", analyze_out,
                      "Workspace root (reads runs/, writes analysis/)");
  analyze->add_option("--bank", analyze_bank,
                      "Bank file (defaults to the path recorded in the manifests)");
  analyze->add_option("--factors", analyze_factors,
                      "Chi-square factors: category | bias-sign | shift-direction");
  analyze->add_option("--display-language", analyze_request.display_language,
                      "Language used for question text in reports");

  // ---- report ----
  ReportRequest report_request;
  std::string report_out = ".", report_analysis;
  std::vector<int> report_highlights;
  std::string report_title = "Evaluation report";
  auto* report = app.add_subcommand("report", "Render result tables");
  report->add_option("analysis", report_analysis,
                     "Analysis directory (default <out>/analysis)");
  report->add_option("--out", report_out,
                     "Workspace root (writes report/ under it)");
  report->add_option("--highlight", report_highlights,
                     "Slot ids to highlight in rendered tables");
  report->add_option("--title", report_title, "Report title");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      return cmd_validate(validate_bank, validate_csv);
    }
    if (run->parsed()) {
      run_request.bank_path = run_bank;
      run_request.phase = parse_phase(run_phase);
      run_request.classify_mode = parse_classify_mode(run_classify_mode);
      run_request.provider.kind = parse_provider_kind(run_provider);
      if (!run_from.empty()) run_request.from_run = run_from;
      if (!run_template.empty()) {
        run_request.template_override = load_template(run_template);
      }
      if (!run_lexicon.empty()) {
        run_request.lexicon_override = load_lexicon(run_lexicon);
      }
      if (!run_backoff.empty()) {
        run_request.provider.retry.backoff_ms = parse_backoff(run_backoff);
      }
      if (run_rps > 0.0) {
        run_request.provider.requests_per_second = run_rps;
      } else if (run_request.provider.kind == ProviderKind::kMock) {
        run_request.provider.requests_per_second = 1e9;  // no live endpoint to protect
      }
      run_request.provider.mock.kind = parse_mock_policy_kind(run_mock_policy);
      if (run_request.provider.kind == ProviderKind::kMock) {
        const auto tmpl = run_request.template_override
                              ? *run_request.template_override
                              : default_template(run_request.language,
                                                 run_request.phase);
        run_request.provider.mock.affirm_token = tmpl.affirm_token;
        run_request.provider.mock.negate_token = tmpl.negate_token;
      }
      if (!run_mock_scripted.empty()) {
        const auto doc = nlohmann::json::parse(std::ifstream(run_mock_scripted));
        for (const auto& [key, value] : doc.items()) {
          run_request.provider.mock.scripted[key] = value.get<std::string>();
        }
      }
      RunStore store{std::filesystem::path(run_out)};
      const auto run_id = execute_run(run_request, store);
      const auto remaining = store.resume_plan(run_id).size();
      std::cout << run_id << "\n";
      if (remaining > 0) {
        std::cerr << remaining << " (question, round) pairs still missing; "
                  << "re-run the same command to resume\n";
        return 2;
      }
      return 0;
    }
    if (analyze->parsed()) {
      analyze_request.store_root = analyze_out;
      analyze_request.run_ids = analyze_runs;
      analyze_request.out_dir = std::filesystem::path(analyze_out) / "analysis";
      if (!analyze_bank.empty()) analyze_request.bank_path = analyze_bank;
      analyze_request.factors.clear();
      for (const auto& f : analyze_factors) {
        analyze_request.factors.push_back(parse_chi_square_factor(f));
      }
      execute_analyze(analyze_request);
      std::cout << analyze_request.out_dir.string() << "\n";
      return 0;
    }
    if (report->parsed()) {
      report_request.analysis_dir =
          report_analysis.empty() ? std::filesystem::path(report_out) / "analysis"
                                  : std::filesystem::path(report_analysis);
      report_request.out_dir = std::filesystem::path(report_out) / "report";
      report_request.title = report_title;
      for (int slot : report_highlights) report_request.highlight_slots.insert(slot);
      execute_report(report_request);
      std::cout << report_request.out_dir.string() << "\n";
      return 0;
    }
  } catch (const ValidationError& ex) {
    for (const auto& finding : ex.findings()) {
      std::cerr << "error: " << finding << "\n";
    }
    return 1;
  } catch (const Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
