#include "biaslens/bank_synth.hpp"

#include <algorithm>
#include <numeric>

#include "biaslens/error.hpp"

namespace biaslens {
namespace {

// Portable bounded draw (split-mix style) so layouts do not depend on the
// standard library's shuffle implementation.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string question_text(const std::string& language, int base_index, int side) {
  // side: 0 = not split, 1 = A-over-B, 2 = B-over-A
  const std::string n = std::to_string(base_index);
  if (language == "ja") {
    if (side == 0) return "合成項目" + n + "について、この選択肢に賛成ですか？";
    if (side == 1) return "合成項目" + n + "について、案Aは案Bより良いですか？";
    return "合成項目" + n + "について、案Bは案Aより良いですか？";
  }
  if (language == "es") {
    if (side == 0) return "Sobre el tema sintético " + n + ", ¿está de acuerdo con esta opción?";
    if (side == 1) return "Sobre el tema sintético " + n + ", ¿es la opción A mejor que la B?";
    return "Sobre el tema sintético " + n + ", ¿es la opción B mejor que la A?";
  }
  if (language == "fr") {
    if (side == 0) return "Sur le sujet synthétique " + n + ", êtes-vous d'accord avec cette option ?";
    if (side == 1) return "Sur le sujet synthétique " + n + ", l'option A est-elle meilleure que la B ?";
    return "Sur le sujet synthétique " + n + ", l'option B est-elle meilleure que la A ?";
  }
  if (side == 0) return "On synthetic topic " + n + ", do you agree with this option?";
  if (side == 1) return "On synthetic topic " + n + ", is option A better than option B?";
  return "On synthetic topic " + n + ", is option B better than option A?";
}

}  // namespace

QuestionBank synthetic_bank(const SyntheticBankSpec& spec) {
  if (spec.base_questions <= 0 || spec.split_pairs < 0 ||
      spec.split_pairs > spec.base_questions ||
      spec.delegable_base < 0 || spec.delegable_base > spec.base_questions) {
    throw ConfigError("inconsistent synthetic bank shape");
  }

  // Choose which base questions are comparison questions via a seeded
  // Fisher-Yates pass over base indices.
  std::vector<int> order(static_cast<std::size_t>(spec.base_questions));
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t state = spec.seed;
  for (std::size_t i = order.size(); i > 1; --i) {
    state = mix(state);
    std::swap(order[i - 1], order[state % i]);
  }
  std::vector<bool> is_split(order.size(), false);
  for (int k = 0; k < spec.split_pairs; ++k) {
    is_split[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
  }

  std::vector<Question> questions;
  questions.reserve(static_cast<std::size_t>(spec.base_questions + spec.split_pairs));
  int next_id = 1;
  int next_pair = 1;
  for (int base = 0; base < spec.base_questions; ++base) {
    const std::string genre = base < spec.delegable_base ? "delegable-task" : "debate";
    if (!is_split[static_cast<std::size_t>(base)]) {
      Question q;
      q.id = next_id++;
      q.genre = genre;
      q.source = "synthetic";
      for (const auto& lang : spec.languages) {
        q.text_by_language[lang] = question_text(lang, base + 1, 0);
      }
      questions.push_back(std::move(q));
      continue;
    }
    const int pair_id = next_pair++;
    for (int side = 1; side <= 2; ++side) {
      Question q;
      q.id = next_id++;
      q.genre = genre;
      q.source = "synthetic";
      q.split = SplitLink{pair_id, side == 1 ? SplitSide::kA : SplitSide::kB};
      for (const auto& lang : spec.languages) {
        q.text_by_language[lang] = question_text(lang, base + 1, side);
      }
      questions.push_back(std::move(q));
    }
  }

  BankMetadata meta;
  meta.name = spec.name;
  meta.version = spec.version;
  meta.languages = spec.languages;
  return QuestionBank(std::move(meta), std::move(questions));
}

}  // namespace biaslens
