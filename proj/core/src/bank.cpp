#include "biaslens/bank.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "biaslens/csv.hpp"

namespace biaslens {
namespace {

using ordered_json = nlohmann::ordered_json;

const std::set<std::string>& known_genres() {
  static const std::set<std::string> genres = {"delegable-task", "debate"};
  return genres;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write file: " + path.string());
  out << content;
  if (!out) throw StorageError("write failed: " + path.string());
}

}  // namespace

const std::string& Question::text(const std::string& language) const {
  auto it = text_by_language.find(language);
  if (it == text_by_language.end()) {
    throw Error("question " + std::to_string(id) + " has no text for language '" +
                language + "'");
  }
  return it->second;
}

QuestionBank::QuestionBank(BankMetadata metadata, std::vector<Question> questions)
    : metadata_(std::move(metadata)), questions_(std::move(questions)) {
  std::sort(questions_.begin(), questions_.end(),
            [](const Question& a, const Question& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    by_id_.emplace(questions_[i].id, i);
  }
  validate();
}

void QuestionBank::validate() {
  std::vector<std::string> findings;

  if (questions_.empty()) findings.push_back("bank has no questions");

  std::set<int> seen;
  for (const auto& q : questions_) {
    if (q.id <= 0) {
      findings.push_back("question id must be positive, got " + std::to_string(q.id));
    }
    if (!seen.insert(q.id).second) {
      findings.push_back("duplicate question id " + std::to_string(q.id));
    }
    if (q.text_by_language.empty()) {
      findings.push_back("question " + std::to_string(q.id) + " has no text");
    }
    for (const auto& lang : metadata_.languages) {
      auto it = q.text_by_language.find(lang);
      if (it == q.text_by_language.end() || it->second.empty()) {
        findings.push_back("question " + std::to_string(q.id) +
                           " missing text for language '" + lang + "'");
      }
    }
    if (!q.genre.empty() && known_genres().count(q.genre) == 0) {
      warnings_.push_back("question " + std::to_string(q.id) + " has unknown genre '" +
                          q.genre + "'");
    }
  }

  // Split topology: each pair id owned by exactly one A side and one B side.
  std::map<int, std::vector<const Question*>> pairs;
  for (const auto& q : questions_) {
    if (q.split) pairs[q.split->pair_id].push_back(&q);
  }
  for (const auto& [pair_id, members] : pairs) {
    if (members.size() != 2) {
      findings.push_back("split pair " + std::to_string(pair_id) + " has " +
                         std::to_string(members.size()) + " side(s), expected 2");
      continue;
    }
    const auto side0 = members[0]->split->side;
    const auto side1 = members[1]->split->side;
    if (side0 == side1) {
      findings.push_back("split pair " + std::to_string(pair_id) +
                         " has two '" + (side0 == SplitSide::kA ? "A" : "B") +
                         "' sides");
    }
    if (members[0]->genre != members[1]->genre) {
      findings.push_back("split pair " + std::to_string(pair_id) +
                         " mixes genres '" + members[0]->genre + "' and '" +
                         members[1]->genre + "'");
    }
    auto languages_of = [](const Question* q) {
      std::set<std::string> langs;
      for (const auto& [code, _] : q->text_by_language) langs.insert(code);
      return langs;
    };
    if (languages_of(members[0]) != languages_of(members[1])) {
      findings.push_back("split pair " + std::to_string(pair_id) +
                         " sides cover different language sets");
    }
  }

  if (!findings.empty()) throw ValidationError(std::move(findings));
}

const Question& QuestionBank::by_id(int id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw Error("unknown question id " + std::to_string(id));
  return questions_[it->second];
}

bool QuestionBank::has_language(const std::string& language) const {
  return std::find(metadata_.languages.begin(), metadata_.languages.end(), language) !=
         metadata_.languages.end();
}

std::vector<SplitPair> QuestionBank::split_pairs() const {
  std::map<int, SplitPair> pairs;
  for (const auto& q : questions_) {
    if (!q.split) continue;
    auto& pair = pairs[q.split->pair_id];
    pair.pair_id = q.split->pair_id;
    if (q.split->side == SplitSide::kA) pair.question_a = &q;
    else pair.question_b = &q;
  }
  std::vector<SplitPair> out;
  out.reserve(pairs.size());
  for (auto& [_, pair] : pairs) out.push_back(pair);
  return out;
}

std::vector<MergedSlot> QuestionBank::merged_numbering() const {
  std::map<int, SplitPair> pair_by_member;
  for (const auto& pair : split_pairs()) {
    pair_by_member[pair.question_a->id] = pair;
    pair_by_member[pair.question_b->id] = pair;
  }
  std::vector<MergedSlot> slots;
  slots.reserve(questions_.size());
  std::set<int> skipped;
  for (const auto& q : questions_) {
    if (skipped.count(q.id)) continue;
    MergedSlot slot;
    slot.slot_id = q.id;
    slot.genre = q.genre;
    auto it = pair_by_member.find(q.id);
    if (it == pair_by_member.end()) {
      slot.question_a = q.id;
    } else {
      const auto& pair = it->second;
      slot.question_a = pair.question_a->id;
      slot.question_b = pair.question_b->id;
      slot.pair_id = pair.pair_id;
      skipped.insert(pair.question_a->id == q.id ? pair.question_b->id
                                                 : pair.question_a->id);
    }
    slots.push_back(std::move(slot));
  }
  return slots;
}

std::size_t QuestionBank::split_pair_count() const { return split_pairs().size(); }

std::size_t QuestionBank::base_question_count() const {
  return questions_.size() - split_pair_count();
}

QuestionBank QuestionBank::from_json_text(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const ordered_json::exception& ex) {
    throw ParseError(std::string("bank is not valid JSON: ") + ex.what());
  }
  try {
    BankMetadata meta;
    meta.name = doc.value("name", "");
    meta.version = doc.value("version", "1");
    for (const auto& lang : doc.value("languages", ordered_json::array())) {
      meta.languages.push_back(lang.get<std::string>());
    }
    std::vector<Question> questions;
    for (const auto& qj : doc.at("questions")) {
      Question q;
      q.id = qj.at("id").get<int>();
      q.genre = qj.value("genre", "");
      q.source = qj.value("source", "");
      if (qj.contains("split") && !qj.at("split").is_null()) {
        SplitLink link;
        link.pair_id = qj.at("split").at("pair").get<int>();
        const auto side = qj.at("split").at("side").get<std::string>();
        if (side != "A" && side != "B") {
          throw ParseError("split side must be 'A' or 'B', got '" + side + "'");
        }
        link.side = side == "A" ? SplitSide::kA : SplitSide::kB;
        q.split = link;
      }
      for (const auto& [code, value] : qj.at("text").items()) {
        q.text_by_language[code] = value.get<std::string>();
      }
      questions.push_back(std::move(q));
    }
    return QuestionBank(std::move(meta), std::move(questions));
  } catch (const ordered_json::exception& ex) {
    throw ParseError(std::string("bank JSON has unexpected shape: ") + ex.what());
  }
}

QuestionBank QuestionBank::load(const std::filesystem::path& path) {
  return from_json_text(read_file(path));
}

QuestionBank QuestionBank::from_csv(const std::filesystem::path& path,
                                    const std::string& name,
                                    const std::string& version) {
  const auto rows = csv::parse(read_file(path));
  if (rows.empty()) throw ParseError("empty CSV bank: " + path.string());
  const std::vector<std::string> expected = {"id",   "genre",    "source", "pair",
                                             "side", "language", "text"};
  if (rows.front() != expected) {
    throw ParseError("CSV bank header must be id,genre,source,pair,side,language,text");
  }
  std::map<int, Question> questions;
  std::set<std::string> languages;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != expected.size()) {
      throw ParseError("CSV bank row " + std::to_string(r + 1) + " has " +
                       std::to_string(row.size()) + " fields, expected 7");
    }
    int id = 0;
    try {
      id = std::stoi(row[0]);
    } catch (const std::exception&) {
      throw ParseError("CSV bank row " + std::to_string(r + 1) + ": bad id '" +
                       row[0] + "'");
    }
    auto& q = questions[id];
    q.id = id;
    q.genre = row[1];
    q.source = row[2];
    if (!row[3].empty()) {
      SplitLink link;
      try {
        link.pair_id = std::stoi(row[3]);
      } catch (const std::exception&) {
        throw ParseError("CSV bank row " + std::to_string(r + 1) + ": bad pair '" +
                         row[3] + "'");
      }
      if (row[4] != "A" && row[4] != "B") {
        throw ParseError("CSV bank row " + std::to_string(r + 1) +
                         ": side must be A or B");
      }
      link.side = row[4] == "A" ? SplitSide::kA : SplitSide::kB;
      q.split = link;
    }
    q.text_by_language[row[5]] = row[6];
    languages.insert(row[5]);
  }
  BankMetadata meta;
  meta.name = name.empty() ? path.stem().string() : name;
  meta.version = version;
  meta.languages.assign(languages.begin(), languages.end());
  std::vector<Question> list;
  list.reserve(questions.size());
  for (auto& [_, q] : questions) list.push_back(std::move(q));
  return QuestionBank(std::move(meta), std::move(list));
}

std::string QuestionBank::to_json_text() const {
  ordered_json doc;
  doc["name"] = metadata_.name;
  doc["version"] = metadata_.version;
  doc["languages"] = metadata_.languages;
  auto questions = ordered_json::array();
  for (const auto& q : questions_) {
    ordered_json qj;
    qj["id"] = q.id;
    qj["genre"] = q.genre;
    qj["source"] = q.source;
    if (q.split) {
      qj["split"] = {{"pair", q.split->pair_id},
                     {"side", q.split->side == SplitSide::kA ? "A" : "B"}};
    }
    ordered_json text;
    for (const auto& [code, value] : q.text_by_language) text[code] = value;
    qj["text"] = std::move(text);
    questions.push_back(std::move(qj));
  }
  doc["questions"] = std::move(questions);
  return doc.dump(2) + "\n";
}

void QuestionBank::save(const std::filesystem::path& path) const {
  write_file(path, to_json_text());
}

}  // namespace biaslens
