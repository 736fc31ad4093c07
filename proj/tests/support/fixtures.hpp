#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "biaslens/bank.hpp"
#include "biaslens/bank_synth.hpp"

namespace biaslens::testing {

// Self-cleaning scratch directory.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("biaslens-test-" + std::to_string(rd()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline Question make_question(int id, const std::string& genre,
                              const std::vector<std::string>& languages,
                              const std::string& text_prefix = "Question") {
  Question q;
  q.id = id;
  q.genre = genre;
  q.source = "fixture";
  for (const auto& lang : languages) {
    q.text_by_language[lang] = text_prefix + " " + std::to_string(id) + " (" + lang + ")?";
  }
  return q;
}

// Eight questions, two split pairs (3/4 and 7/8), four languages.
inline QuestionBank small_bank() {
  const std::vector<std::string> langs = {"en", "ja", "es", "fr"};
  std::vector<Question> questions;
  for (int id = 1; id <= 2; ++id) {
    questions.push_back(make_question(id, "delegable-task", langs));
  }
  for (int id = 3; id <= 8; ++id) {
    questions.push_back(make_question(id, "debate", langs));
  }
  questions[2].split = SplitLink{1, SplitSide::kA};
  questions[3].split = SplitLink{1, SplitSide::kB};
  questions[6].split = SplitLink{2, SplitSide::kA};
  questions[7].split = SplitLink{2, SplitSide::kB};
  return QuestionBank(BankMetadata{"small", "1", langs}, std::move(questions));
}

// 436 base + 103 pairs = 539 entries, the published battery shape.
inline QuestionBank paper_shaped_bank() {
  SyntheticBankSpec spec;
  spec.name = "paper-shaped";
  return synthetic_bank(spec);
}

}  // namespace biaslens::testing
