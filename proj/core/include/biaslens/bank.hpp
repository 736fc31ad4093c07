#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "biaslens/error.hpp"

namespace biaslens {

enum class SplitSide { kA, kB };

struct SplitLink {
  int pair_id = 0;
  SplitSide side = SplitSide::kA;
};

// One binary-choice item of the battery. Ids are authored, not assigned,
// so published numbering schemes can be replicated exactly.
struct Question {
  int id = 0;
  std::string genre;
  std::string source;
  std::map<std::string, std::string> text_by_language;
  std::optional<SplitLink> split;

  const std::string& text(const std::string& language) const;
};

struct BankMetadata {
  std::string name;
  std::string version;
  std::vector<std::string> languages;
};

struct SplitPair {
  int pair_id = 0;
  const Question* question_a = nullptr;
  const Question* question_b = nullptr;
};

// One row of the merged result view: split pairs collapse onto the pair's
// first id and the second id is skipped. question_a / question_b follow the
// authored split sides, not id order.
struct MergedSlot {
  int slot_id = 0;
  std::string genre;
  int question_a = 0;                // side A / the only question
  std::optional<int> question_b;     // side B of a split pair
  std::optional<int> pair_id;
};

class QuestionBank {
 public:
  QuestionBank(BankMetadata metadata, std::vector<Question> questions);

  static QuestionBank load(const std::filesystem::path& path);
  static QuestionBank from_json_text(const std::string& json_text);
  // One row per (question, language); header:
  // id,genre,source,pair,side,language,text
  static QuestionBank from_csv(const std::filesystem::path& path,
                               const std::string& name = "",
                               const std::string& version = "1");

  void save(const std::filesystem::path& path) const;
  std::string to_json_text() const;

  const BankMetadata& metadata() const { return metadata_; }
  const std::vector<Question>& questions() const { return questions_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  const Question& by_id(int id) const;
  bool has_language(const std::string& language) const;

  std::vector<SplitPair> split_pairs() const;
  std::vector<MergedSlot> merged_numbering() const;

  std::size_t split_pair_count() const;
  // questions() minus one entry per split pair.
  std::size_t base_question_count() const;

 private:
  void validate();

  BankMetadata metadata_;
  std::vector<Question> questions_;      // sorted by id
  std::map<int, std::size_t> by_id_;
  std::vector<std::string> warnings_;
};

}  // namespace biaslens
