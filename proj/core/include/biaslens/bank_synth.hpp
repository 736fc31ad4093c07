#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biaslens/bank.hpp"

namespace biaslens {

// Shape of a generated battery. Defaults mirror the shipped demo layout:
// 436 base questions (169 delegable-task, 267 debate), 103 of them
// comparison questions split into directional pairs, 539 entries total.
struct SyntheticBankSpec {
  std::string name = "synthetic-battery";
  std::string version = "1";
  std::vector<std::string> languages = {"en", "ja", "es", "fr"};
  int base_questions = 436;
  int split_pairs = 103;
  int delegable_base = 169;
  std::uint64_t seed = 7;  // picks which base questions are comparisons
};

// Deterministic synthetic battery with placeholder text per language.
// Content is machine-generated filler, usable for pipeline exercise only.
QuestionBank synthetic_bank(const SyntheticBankSpec& spec = {});

}  // namespace biaslens
