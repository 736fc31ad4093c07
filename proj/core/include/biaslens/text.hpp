#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace biaslens::text {

// Decodes UTF-8 into codepoints; invalid sequences become U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view input);
std::string encode_utf8(const std::vector<char32_t>& codepoints);

// Case folding (ASCII + Latin-1 supplement), full/half-width folding for
// CJK-range compatibility forms, ideographic space to ASCII space.
char32_t fold_codepoint(char32_t cp);

bool is_space_codepoint(char32_t cp);
bool is_punct_codepoint(char32_t cp);

// Folds case and width, collapses whitespace runs, trims. Punctuation kept.
std::string fold_text(std::string_view input);

// fold_text plus punctuation removal; the canonical form used for lexicon
// equality checks.
std::string normalize_text(std::string_view input);

// True if `folded` starts with `core` and the match ends at a boundary
// (end of string, whitespace, or punctuation in the folded input).
bool starts_with_boundary(std::string_view folded, std::string_view core);

// Stable 64-bit FNV-1a; used for scripted mock lookup keys.
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

}  // namespace biaslens::text
