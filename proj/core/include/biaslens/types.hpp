#pragma once

#include <string_view>

#include "biaslens/error.hpp"

namespace biaslens {

enum class Phase { kInitial, kOpposing };

// The opinion injected into an opposing-phase prompt.
enum class Stance { kAffirm, kNegate };

enum class Category { kAffirm, kNegate, kNeutral, kExplainer };

enum class Outcome { kOk, kRefused, kFailed };

constexpr std::string_view to_string(Phase phase) {
  return phase == Phase::kInitial ? "initial" : "opposing";
}

constexpr std::string_view to_string(Stance stance) {
  return stance == Stance::kAffirm ? "affirm" : "negate";
}

constexpr std::string_view to_string(Category category) {
  switch (category) {
    case Category::kAffirm: return "affirm";
    case Category::kNegate: return "negate";
    case Category::kNeutral: return "neutral";
    case Category::kExplainer: return "explainer";
  }
  return "explainer";
}

constexpr std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kOk: return "ok";
    case Outcome::kRefused: return "refused";
    case Outcome::kFailed: return "failed";
  }
  return "failed";
}

inline Phase parse_phase(std::string_view text) {
  if (text == "initial") return Phase::kInitial;
  if (text == "opposing") return Phase::kOpposing;
  throw ParseError("unknown phase: " + std::string(text));
}

inline Stance parse_stance(std::string_view text) {
  if (text == "affirm") return Stance::kAffirm;
  if (text == "negate") return Stance::kNegate;
  throw ParseError("unknown stance: " + std::string(text));
}

inline Category parse_category(std::string_view text) {
  if (text == "affirm") return Category::kAffirm;
  if (text == "negate") return Category::kNegate;
  if (text == "neutral") return Category::kNeutral;
  if (text == "explainer") return Category::kExplainer;
  throw ParseError("unknown category: " + std::string(text));
}

inline Outcome parse_outcome(std::string_view text) {
  if (text == "ok") return Outcome::kOk;
  if (text == "refused") return Outcome::kRefused;
  if (text == "failed") return Outcome::kFailed;
  throw ParseError("unknown outcome: " + std::string(text));
}

// Answer value of a categorical reading: affirm 1, negate -1, anything else 0.
constexpr int answer_value(Category category) {
  switch (category) {
    case Category::kAffirm: return 1;
    case Category::kNegate: return -1;
    case Category::kNeutral:
    case Category::kExplainer: return 0;
  }
  return 0;
}

}  // namespace biaslens
