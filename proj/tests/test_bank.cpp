#include "biaslens/bank.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "biaslens/bank_synth.hpp"
#include "biaslens/csv.hpp"
#include "support/fixtures.hpp"

using namespace biaslens;
using biaslens::testing::TempDir;
using biaslens::testing::make_question;
using biaslens::testing::small_bank;

namespace {

const std::vector<std::string> kLangs = {"en", "ja", "es", "fr"};

}  // namespace

TEST_CASE("sample bank loads with expected shape") {
  const auto bank = QuestionBank::load(std::string(BIASLENS_DATA_DIR) +
                                       "/banks/sample.json");
  CHECK(bank.questions().size() == 8);
  CHECK(bank.split_pair_count() == 2);
  CHECK(bank.metadata().languages.size() == 4);
  CHECK(bank.merged_numbering().size() == 6);
  for (const auto& q : bank.questions()) {
    for (const auto& lang : bank.metadata().languages) {
      CHECK_FALSE(q.text(lang).empty());
    }
  }
}

TEST_CASE("orphan split side fails validation naming the pair") {
  std::vector<Question> questions;
  for (int id = 1; id <= 5; ++id) {
    questions.push_back(make_question(id, "debate", kLangs));
  }
  questions[4].split = SplitLink{9, SplitSide::kA};  // no B side
  try {
    QuestionBank bank(BankMetadata{"broken", "1", kLangs}, std::move(questions));
    FAIL("expected validation error");
  } catch (const ValidationError& ex) {
    CHECK(ex.what() == doctest::Contains("9"));
    CHECK(ex.what() == doctest::Contains("split pair"));
  }
}

TEST_CASE("duplicate ids and missing language text are reported together") {
  std::vector<Question> questions;
  questions.push_back(make_question(1, "debate", kLangs));
  questions.push_back(make_question(1, "debate", kLangs));
  auto q3 = make_question(3, "debate", kLangs);
  q3.text_by_language.erase("fr");
  questions.push_back(q3);
  try {
    QuestionBank bank(BankMetadata{"broken", "1", kLangs}, std::move(questions));
    FAIL("expected validation error");
  } catch (const ValidationError& ex) {
    const auto& findings = ex.findings();
    CHECK(findings.size() >= 2);
    CHECK(std::any_of(findings.begin(), findings.end(), [](const std::string& f) {
      return f.find("duplicate") != std::string::npos;
    }));
    CHECK(std::any_of(findings.begin(), findings.end(), [](const std::string& f) {
      return f.find("missing text for language 'fr'") != std::string::npos;
    }));
  }
}

TEST_CASE("unknown genre warns instead of failing") {
  std::vector<Question> questions = {make_question(1, "haiku", kLangs)};
  QuestionBank bank(BankMetadata{"odd", "1", kLangs}, std::move(questions));
  REQUIRE(bank.warnings().size() == 1);
  CHECK(bank.warnings().front() == doctest::Contains("haiku"));
}

TEST_CASE("paper-shaped bank: 436 base + 103 pairs = 539 entries, 436 slots") {
  const auto bank = biaslens::testing::paper_shaped_bank();
  CHECK(bank.questions().size() == 539);
  CHECK(bank.split_pair_count() == 103);
  CHECK(bank.base_question_count() == 436);
  CHECK(bank.merged_numbering().size() == 436);
  CHECK(bank.split_pairs().size() == 103);

  // Ids are 1..539 and pair members are adjacent.
  for (std::size_t i = 0; i < bank.questions().size(); ++i) {
    CHECK(bank.questions()[i].id == static_cast<int>(i) + 1);
  }
  for (const auto& pair : bank.split_pairs()) {
    CHECK(pair.question_b->id == pair.question_a->id + 1);
    CHECK(pair.question_a->genre == pair.question_b->genre);
  }
}

TEST_CASE("split_pairs preserves authored sides") {
  const auto bank = small_bank();
  const auto pairs = bank.split_pairs();
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].pair_id == 1);
  CHECK(pairs[0].question_a->id == 3);
  CHECK(pairs[0].question_b->id == 4);
  CHECK(pairs[1].question_a->id == 7);
  CHECK(pairs[1].question_b->id == 8);
}

TEST_CASE("bank without pairs has no split records and identity slots") {
  std::vector<Question> questions;
  for (int id : {2, 5, 9}) questions.push_back(make_question(id, "debate", kLangs));
  QuestionBank bank(BankMetadata{"plain", "1", kLangs}, std::move(questions));
  CHECK(bank.split_pairs().empty());
  const auto slots = bank.merged_numbering();
  REQUIRE(slots.size() == 3);
  CHECK(slots[0].slot_id == 2);
  CHECK(slots[1].slot_id == 5);
  CHECK(slots[2].slot_id == 9);
  for (const auto& slot : slots) CHECK_FALSE(slot.question_b.has_value());
}

TEST_CASE("merged numbering skips the second id of a pair") {
  std::vector<Question> questions;
  questions.push_back(make_question(458, "debate", kLangs));
  auto a = make_question(459, "debate", kLangs);
  auto b = make_question(460, "debate", kLangs);
  a.split = SplitLink{12, SplitSide::kA};
  b.split = SplitLink{12, SplitSide::kB};
  questions.push_back(a);
  questions.push_back(b);
  questions.push_back(make_question(461, "debate", kLangs));
  QuestionBank bank(BankMetadata{"skip", "1", kLangs}, std::move(questions));

  const auto slots = bank.merged_numbering();
  REQUIRE(slots.size() == 3);
  CHECK(slots[0].slot_id == 458);
  CHECK(slots[1].slot_id == 459);
  CHECK(slots[1].question_a == 459);
  CHECK(slots[1].question_b == 460);
  CHECK(slots[2].slot_id == 461);
  CHECK(std::none_of(slots.begin(), slots.end(),
                     [](const MergedSlot& s) { return s.slot_id == 460; }));
}

TEST_CASE("slot count identity holds across random bank shapes") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    SyntheticBankSpec spec;
    spec.base_questions = 20 + static_cast<int>(seed) * 7;
    spec.split_pairs = static_cast<int>(seed) * 2;
    spec.delegable_base = 10;
    spec.seed = seed;
    const auto bank = synthetic_bank(spec);
    CHECK(bank.merged_numbering().size() ==
          bank.questions().size() - bank.split_pair_count());
  }
}

TEST_CASE("save/load round-trips the canonical form") {
  TempDir dir;
  const auto bank = small_bank();
  const auto path = dir / "bank.json";
  bank.save(path);
  const auto reloaded = QuestionBank::load(path);
  CHECK(reloaded.to_json_text() == bank.to_json_text());

  const auto again = dir / "bank2.json";
  reloaded.save(again);
  const auto twice = QuestionBank::load(again);
  CHECK(twice.to_json_text() == bank.to_json_text());
}

TEST_CASE("CSV import assembles the same structure as JSON") {
  TempDir dir;
  const auto bank = small_bank();
  csv::Writer w;
  w.field("id").field("genre").field("source").field("pair").field("side");
  w.field("language").field("text").end_row();
  for (const auto& q : bank.questions()) {
    for (const auto& [lang, text] : q.text_by_language) {
      w.field(static_cast<long long>(q.id)).field(q.genre).field(q.source);
      if (q.split) {
        w.field(static_cast<long long>(q.split->pair_id));
        w.field(q.split->side == SplitSide::kA ? "A" : "B");
      } else {
        w.empty_field().empty_field();
      }
      w.field(lang).field(text).end_row();
    }
  }
  const auto path = dir / "bank.csv";
  std::ofstream(path) << w.str();

  const auto imported = QuestionBank::from_csv(path, "small", "1");
  CHECK(imported.questions().size() == bank.questions().size());
  CHECK(imported.split_pair_count() == bank.split_pair_count());
  CHECK(imported.to_json_text() == bank.to_json_text());
}

TEST_CASE("split pair genre and language mismatches fail validation") {
  SUBCASE("genre mismatch") {
    std::vector<Question> questions;
    auto a = make_question(1, "debate", kLangs);
    auto b = make_question(2, "delegable-task", kLangs);
    a.split = SplitLink{1, SplitSide::kA};
    b.split = SplitLink{1, SplitSide::kB};
    questions = {a, b};
    CHECK_THROWS_AS(QuestionBank(BankMetadata{"x", "1", kLangs}, std::move(questions)),
                    ValidationError);
  }
  SUBCASE("same side twice") {
    std::vector<Question> questions;
    auto a = make_question(1, "debate", kLangs);
    auto b = make_question(2, "debate", kLangs);
    a.split = SplitLink{1, SplitSide::kA};
    b.split = SplitLink{1, SplitSide::kA};
    questions = {a, b};
    CHECK_THROWS_AS(QuestionBank(BankMetadata{"x", "1", kLangs}, std::move(questions)),
                    ValidationError);
  }
}

TEST_CASE("malformed JSON raises a parse error") {
  CHECK_THROWS_AS(QuestionBank::from_json_text("{ not json"), ParseError);
  CHECK_THROWS_AS(QuestionBank::from_json_text("{\"name\":\"x\"}"), ParseError);
}
