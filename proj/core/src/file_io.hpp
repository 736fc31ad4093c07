#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "biaslens/error.hpp"

namespace biaslens::detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write file: " + tmp);
    out << content;
    out.flush();
    if (!out) throw StorageError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace biaslens::detail
