#include "biaslens/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "biaslens/error.hpp"

namespace biaslens::csv {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (value == 0.0) return "0";  // folds negative zero
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  (void)ec;
  return std::string(buf.data(), ptr);
}

std::string format_number(double value, int max_decimals) {
  if (std::isnan(value)) return "nan";
  std::array<char, 64> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.*f", max_decimals, value);
  std::string out(buf.data(), static_cast<std::size_t>(n));
  if (out.find('.') != std::string::npos) {
    while (out.back() == '0') out.pop_back();
    if (out.back() == '.') out.pop_back();
  }
  if (out == "-0") out = "0";
  return out;
}

std::string escape(std::string_view field) {
  const bool needs_quoting = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quoting) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

Writer& Writer::field(std::string_view value) {
  if (row_open_) out_.push_back(',');
  out_ += escape(value);
  row_open_ = true;
  return *this;
}

Writer& Writer::field(double value) { return field(format_number(value)); }

Writer& Writer::field(long long value) { return field(std::to_string(value)); }

Writer& Writer::empty_field() { return field(std::string_view{}); }

Writer& Writer::end_row() {
  out_.push_back('\n');
  row_open_ = false;
  return *this;
}

std::vector<std::vector<std::string>> parse(std::string_view content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto flush_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto flush_row = [&] {
    flush_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < content.size()) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      flush_field();
    } else if (c == '\n') {
      flush_row();
    } else if (c == '\r') {
      // swallowed; \r\n handled by the \n branch
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) throw ParseError("unterminated quoted CSV field");
  if (field_started || !field.empty() || !row.empty()) flush_row();
  return rows;
}

}  // namespace biaslens::csv
