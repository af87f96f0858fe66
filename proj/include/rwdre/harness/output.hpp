#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rwdre/core/error.hpp"

namespace rwdre::harness {

// Shortest round-trip decimal form, so outputs are byte-stable.
inline std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
std::string fmt(T v) requires std::is_integral_v<T> {
  return std::to_string(v);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& hash, std::uint64_t seed,
            const std::vector<std::string>& columns)
      : out_(path) {
    if (!out_) throw ResourceError("cannot write '" + path.string() + "'");
    out_ << "# config_hash=" << hash << " seed=" << seed << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }

  template <class... Ts>
  void row(const Ts&... vals) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cell(vals)), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class T>
  static std::string cell(const T& v) {
    return fmt(v);
  }

  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ResourceError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace rwdre::harness
