#include "biaslens/text.hpp"

#include <array>
#include <charconv>

namespace biaslens::text {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

int sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 0;
}

}  // namespace

std::vector<char32_t> decode_utf8(std::string_view input) {
  std::vector<char32_t> out;
  out.reserve(input.size());
  std::size_t i = 0;
  while (i < input.size()) {
    const auto lead = static_cast<unsigned char>(input[i]);
    const int len = sequence_length(lead);
    if (len == 0 || i + static_cast<std::size_t>(len) > input.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    char32_t cp = 0;
    switch (len) {
      case 1: cp = lead; break;
      case 2: cp = lead & 0x1F; break;
      case 3: cp = lead & 0x0F; break;
      case 4: cp = lead & 0x07; break;
    }
    bool valid = true;
    for (int k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(input[i + static_cast<std::size_t>(k)]);
      if ((cont >> 6) != 0x2) {
        valid = false;
        break;
      }
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!valid || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

std::string encode_utf8(const std::vector<char32_t>& codepoints) {
  std::string out;
  out.reserve(codepoints.size() * 2);
  for (char32_t cp : codepoints) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

char32_t fold_codepoint(char32_t cp) {
  // Full-width ASCII block to half-width first, then case fold.
  if (cp >= 0xFF01 && cp <= 0xFF5E) cp -= 0xFEE0;
  if (cp == 0x3000) return U' ';  // ideographic space
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  // Latin-1 supplement uppercase, excluding the multiplication sign.
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp == 0x152) return 0x153;  // OE ligature
  return cp;
}

bool is_space_codepoint(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
         cp == U'\v' || cp == 0xA0 || cp == 0x3000;
}

bool is_punct_codepoint(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0xA1:    // inverted exclamation
    case 0xBF:    // inverted question
    case 0x2013:  // en dash
    case 0x2014:  // em dash
    case 0x2026:  // ellipsis
    case 0x3001:  // ideographic comma
    case 0x3002:  // ideographic full stop
    case 0x30FB:  // katakana middle dot
      return true;
    default:
      break;
  }
  if (cp >= 0x2018 && cp <= 0x201F) return true;  // curly quotes
  if (cp >= 0x3008 && cp <= 0x3011) return true;  // CJK brackets
  if (cp >= 0x300C && cp <= 0x300F) return true;  // corner brackets
  if (cp >= 0xFF61 && cp <= 0xFF65) return true;  // half-width CJK punctuation
  return false;
}

namespace {

// Stripped punctuation separates tokens rather than vanishing, so prefix
// boundaries survive normalization.
std::string collapse(const std::vector<char32_t>& cps, bool keep_punct) {
  std::vector<char32_t> out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (is_space_codepoint(cp) || (!keep_punct && is_punct_codepoint(cp))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(U' ');
      pending_space = false;
    }
    out.push_back(cp);
  }
  return encode_utf8(out);
}

}  // namespace

std::string fold_text(std::string_view input) {
  auto cps = decode_utf8(input);
  for (auto& cp : cps) cp = fold_codepoint(cp);
  return collapse(cps, /*keep_punct=*/true);
}

std::string normalize_text(std::string_view input) {
  auto cps = decode_utf8(input);
  for (auto& cp : cps) cp = fold_codepoint(cp);
  return collapse(cps, /*keep_punct=*/false);
}

bool starts_with_boundary(std::string_view folded, std::string_view core) {
  if (core.empty() || !folded.starts_with(core)) return false;
  if (folded.size() == core.size()) return true;
  const auto rest = decode_utf8(folded.substr(core.size()));
  if (rest.empty()) return true;
  return is_space_codepoint(rest.front()) || is_punct_codepoint(rest.front());
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string fnv1a64_hex(std::string_view data) {
  const std::uint64_t h = fnv1a64(data);
  std::array<char, 17> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + 16, h, 16);
  std::string hex(buf.data(), ptr);
  return std::string(16 - hex.size(), '0') + hex;
}

}  // namespace biaslens::text
