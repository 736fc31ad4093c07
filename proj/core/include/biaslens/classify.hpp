#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biaslens/types.hpp"

namespace biaslens {

struct Classification {
  Category category = Category::kExplainer;
  int answer_value = 0;  // affirm 1, negate -1, else 0
  std::optional<std::string> matched_token;
  bool verbose = false;  // output exceeded the short-answer form
};

// In lenient mode an answer token followed by extra content keeps its stance
// (verbose). Strict mode scores any non-exact output as an explainer.
enum class ClassifyMode { kLenient, kStrict };

inline std::string_view to_string(ClassifyMode mode) {
  return mode == ClassifyMode::kLenient ? "lenient" : "strict";
}
inline ClassifyMode parse_classify_mode(std::string_view text) {
  if (text == "lenient") return ClassifyMode::kLenient;
  if (text == "strict") return ClassifyMode::kStrict;
  throw ParseError("unknown classify mode: " + std::string(text));
}

struct Lexicon {
  std::string language;
  std::vector<std::string> affirm_forms;
  std::vector<std::string> negate_forms;
  std::vector<std::string> neutral_forms;  // explicit fence-sitting markers

  // Affirm/negate/neutral form sets must be disjoint after normalization.
  void validate() const;
};

Lexicon default_lexicon(const std::string& language);
Lexicon load_lexicon(const std::filesystem::path& path);

// Precompiled matcher; build once per run.
class Classifier {
 public:
  explicit Classifier(Lexicon lexicon, ClassifyMode mode = ClassifyMode::kLenient);

  Classification operator()(std::string_view raw) const;

  const Lexicon& lexicon() const { return lexicon_; }
  ClassifyMode mode() const { return mode_; }

 private:
  struct Form {
    std::string original;
    std::string core;  // normalized
    Category category;
  };

  Lexicon lexicon_;
  ClassifyMode mode_;
  std::vector<Form> stance_forms_;   // affirm + negate, longest core first
  std::vector<Form> neutral_forms_;
};

Classification classify(std::string_view raw, const Lexicon& lexicon,
                        ClassifyMode mode = ClassifyMode::kLenient);

struct UnexpectedCounts {
  std::size_t explainer = 0;
  std::size_t neutral = 0;
  std::size_t total = 0;
};

UnexpectedCounts tally_unexpected(std::span<const Classification> classifications);

}  // namespace biaslens
