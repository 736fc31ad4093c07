#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace biaslens::csv {

// Shortest round-trip decimal form; stable across runs on one platform.
std::string format_number(double value);
std::string format_number(double value, int max_decimals);

std::string escape(std::string_view field);

class Writer {
 public:
  Writer& field(std::string_view value);
  Writer& field(double value);
  Writer& field(long long value);
  Writer& empty_field();
  Writer& end_row();
  const std::string& str() const { return out_; }

 private:
  std::string out_;
  bool row_open_ = false;
};

// RFC 4180 style: quoted fields, embedded commas/newlines/quotes.
std::vector<std::vector<std::string>> parse(std::string_view content);

}  // namespace biaslens::csv
