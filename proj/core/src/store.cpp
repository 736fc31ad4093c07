#include "biaslens/store.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

namespace biaslens {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write file: " + tmp);
    out << content;
    out.flush();
    if (!out) throw StorageError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

ordered_json template_to_json(const PromptTemplate& tmpl) {
  ordered_json j;
  j["language"] = tmpl.language;
  j["phase"] = std::string(to_string(tmpl.phase));
  j["pattern"] = tmpl.pattern;
  j["affirm_token"] = tmpl.affirm_token;
  j["negate_token"] = tmpl.negate_token;
  j["version"] = tmpl.version;
  return j;
}

PromptTemplate template_from_json(const ordered_json& j) {
  PromptTemplate tmpl;
  tmpl.language = j.at("language").get<std::string>();
  tmpl.phase = parse_phase(j.at("phase").get<std::string>());
  tmpl.pattern = j.at("pattern").get<std::string>();
  tmpl.affirm_token = j.at("affirm_token").get<std::string>();
  tmpl.negate_token = j.at("negate_token").get<std::string>();
  tmpl.version = j.value("version", "unversioned");
  return tmpl;
}

}  // namespace

std::string manifest_to_json_text(const RunManifest& m) {
  ordered_json j;
  j["run_id"] = m.run_id;
  j["model"] = m.model;
  j["provider_kind"] = m.provider_kind;
  j["language"] = m.language;
  j["phase"] = std::string(to_string(m.phase));
  j["n_rounds"] = m.n_rounds;
  j["seed"] = m.seed;
  j["bank_name"] = m.bank_name;
  j["bank_version"] = m.bank_version;
  j["bank_path"] = m.bank_path;
  j["question_ids"] = m.question_ids;
  j["template"] = template_to_json(m.prompt_template);
  j["template_version"] = m.prompt_template.version;
  j["classify_mode"] = std::string(to_string(m.classify_mode));
  try {
    j["decoding_params"] = ordered_json::parse(m.decoding_params_json);
  } catch (const ordered_json::exception&) {
    throw ParseError("decoding parameters are not valid JSON");
  }
  j["created_at"] = m.created_at;
  if (m.from_run) {
    j["from_run"] = *m.from_run;
    ordered_json stances;
    for (const auto& [id, stance] : m.stances) {
      stances[std::to_string(id)] = std::string(to_string(stance));
    }
    j["stances"] = std::move(stances);
    ordered_json biases;
    for (const auto& [id, b] : m.initial_bias) {
      biases[std::to_string(id)] = b;
    }
    j["initial_bias"] = std::move(biases);
  }
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json_text(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::exception& ex) {
    throw ParseError(std::string("manifest is not valid JSON: ") + ex.what());
  }
  try {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.model = j.at("model").get<std::string>();
    m.provider_kind = j.at("provider_kind").get<std::string>();
    m.language = j.at("language").get<std::string>();
    m.phase = parse_phase(j.at("phase").get<std::string>());
    m.n_rounds = j.at("n_rounds").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.bank_name = j.at("bank_name").get<std::string>();
    m.bank_version = j.at("bank_version").get<std::string>();
    m.bank_path = j.value("bank_path", "");
    m.question_ids = j.at("question_ids").get<std::vector<int>>();
    m.prompt_template = template_from_json(j.at("template"));
    m.classify_mode = parse_classify_mode(j.at("classify_mode").get<std::string>());
    m.decoding_params_json = j.at("decoding_params").dump();
    m.created_at = j.value("created_at", "");
    if (j.contains("from_run")) {
      m.from_run = j.at("from_run").get<std::string>();
      for (const auto& [key, value] : j.at("stances").items()) {
        m.stances[std::stoi(key)] = parse_stance(value.get<std::string>());
      }
      for (const auto& [key, value] : j.at("initial_bias").items()) {
        m.initial_bias[std::stoi(key)] = value.get<double>();
      }
    }
    return m;
  } catch (const ordered_json::exception& ex) {
    throw ParseError(std::string("manifest JSON has unexpected shape: ") + ex.what());
  }
}

std::string response_to_json_line(const RawResponse& r) {
  ordered_json j;
  j["run_id"] = r.run_id;
  j["question"] = r.question_id;
  j["round"] = r.round;
  j["prompt"] = r.prompt;
  j["text"] = r.raw_text;
  j["latency_ms"] = r.latency_ms;
  j["attempts"] = r.attempts;
  j["outcome"] = std::string(to_string(r.outcome));
  return j.dump();
}

RawResponse response_from_json_line(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const ordered_json::exception& ex) {
    throw ParseError(std::string("response record is not valid JSON: ") + ex.what());
  }
  try {
    RawResponse r;
    r.run_id = j.at("run_id").get<std::string>();
    r.question_id = j.at("question").get<int>();
    r.round = j.at("round").get<int>();
    r.prompt = j.at("prompt").get<std::string>();
    r.raw_text = j.at("text").get<std::string>();
    r.latency_ms = j.at("latency_ms").get<double>();
    r.attempts = j.at("attempts").get<int>();
    r.outcome = parse_outcome(j.at("outcome").get<std::string>());
    return r;
  } catch (const ordered_json::exception& ex) {
    throw ParseError(std::string("response record has unexpected shape: ") + ex.what());
  }
}

RunStore::RunStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_ / "runs");
}

std::filesystem::path RunStore::run_dir(const std::string& run_id) const {
  if (run_id.empty() || run_id.find('/') != std::string::npos ||
      run_id.find("..") != std::string::npos) {
    throw StorageError("invalid run id: '" + run_id + "'");
  }
  return root_ / "runs" / run_id;
}

bool RunStore::exists(const std::string& run_id) const {
  return std::filesystem::exists(run_dir(run_id) / "manifest.json");
}

std::vector<std::string> RunStore::list_runs() const {
  std::vector<std::string> runs;
  const auto dir = root_ / "runs";
  if (!std::filesystem::exists(dir)) return runs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory() &&
        std::filesystem::exists(entry.path() / "manifest.json")) {
      runs.push_back(entry.path().filename().string());
    }
  }
  std::sort(runs.begin(), runs.end());
  return runs;
}

void RunStore::create_run(const RunManifest& manifest) {
  if (exists(manifest.run_id)) {
    throw StorageError("run '" + manifest.run_id + "' already exists");
  }
  const auto dir = run_dir(manifest.run_id);
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "manifest.json", manifest_to_json_text(manifest));
}

RunManifest RunStore::read_manifest(const std::string& run_id) const {
  if (!exists(run_id)) throw StorageError("unknown run: '" + run_id + "'");
  return manifest_from_json_text(read_file(run_dir(run_id) / "manifest.json"));
}

RunStore::Writer::Writer(std::filesystem::path path, std::string run_id,
                         std::set<std::pair<int, int>> seen)
    : out_(path, std::ios::binary | std::ios::app),
      run_id_(std::move(run_id)),
      seen_(std::move(seen)) {
  if (!out_) throw StorageError("cannot open for append: " + path.string());
}

void RunStore::Writer::append(const RawResponse& response) {
  if (response.run_id != run_id_) {
    throw StorageError("response for run '" + response.run_id +
                       "' appended to run '" + run_id_ + "'");
  }
  const auto key = std::make_pair(response.question_id, response.round);
  if (!seen_.insert(key).second) {
    throw StorageError("duplicate response for run '" + run_id_ + "' question " +
                       std::to_string(key.first) + " round " +
                       std::to_string(key.second));
  }
  out_ << response_to_json_line(response) << '\n';
  out_.flush();
  if (!out_) throw StorageError("append failed for run '" + run_id_ + "'");
}

RunStore::Writer RunStore::open_writer(const std::string& run_id) {
  if (!exists(run_id)) throw StorageError("unknown run: '" + run_id + "'");
  std::set<std::pair<int, int>> seen;
  for (const auto& r : read_responses(run_id)) {
    seen.emplace(r.question_id, r.round);
  }
  return Writer(run_dir(run_id) / "responses.jsonl", run_id, std::move(seen));
}

std::vector<RawResponse> RunStore::read_responses(const std::string& run_id) const {
  std::vector<RawResponse> out;
  const auto path = run_dir(run_id) / "responses.jsonl";
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open responses: " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(response_from_json_line(line));
  }
  return out;
}

std::vector<std::pair<int, int>> RunStore::resume_plan(const std::string& run_id) const {
  const auto manifest = read_manifest(run_id);
  std::set<std::pair<int, int>> done;
  for (const auto& r : read_responses(run_id)) {
    if (r.outcome != Outcome::kFailed) done.emplace(r.question_id, r.round);
  }
  std::vector<std::pair<int, int>> missing;
  for (int round = 1; round <= manifest.n_rounds; ++round) {
    for (int qid : manifest.question_ids) {
      if (!done.count({qid, round})) missing.emplace_back(qid, round);
    }
  }
  return missing;
}

void RunStore::write_classifications(const std::string& run_id,
                                     const std::vector<ClassifiedRecord>& records) {
  std::string content;
  for (const auto& rec : records) {
    ordered_json j;
    j["question"] = rec.question_id;
    j["round"] = rec.round;
    j["category"] = std::string(to_string(rec.classification.category));
    j["value"] = rec.classification.answer_value;
    j["verbose"] = rec.classification.verbose;
    if (rec.classification.matched_token) {
      j["matched"] = *rec.classification.matched_token;
    }
    content += j.dump();
    content += '\n';
  }
  write_file_atomic(run_dir(run_id) / "classifications.jsonl", content);
}

std::vector<ClassifiedRecord> RunStore::read_classifications(
    const std::string& run_id) const {
  const auto path = run_dir(run_id) / "classifications.jsonl";
  std::vector<ClassifiedRecord> out;
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open classifications: " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
      ClassifiedRecord rec;
      rec.question_id = j.at("question").get<int>();
      rec.round = j.at("round").get<int>();
      rec.classification.category = parse_category(j.at("category").get<std::string>());
      rec.classification.answer_value = j.at("value").get<int>();
      rec.classification.verbose = j.at("verbose").get<bool>();
      if (j.contains("matched")) {
        rec.classification.matched_token = j.at("matched").get<std::string>();
      }
      out.push_back(std::move(rec));
    } catch (const ordered_json::exception& ex) {
      throw ParseError(std::string("classification record malformed: ") + ex.what());
    }
  }
  return out;
}

void RunStore::write_metrics_csv(const std::string& run_id,
                                 const std::string& csv_text) {
  write_file_atomic(run_dir(run_id) / "metrics.csv", csv_text);
}

std::string RunStore::read_metrics_csv(const std::string& run_id) const {
  return read_file(run_dir(run_id) / "metrics.csv");
}

}  // namespace biaslens
