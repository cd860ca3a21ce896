#pragma once

// CSV artifacts: a '#' provenance line (version, seed, config hash), a
// header row, then rows with a fixed column order.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace cscg::cli {

struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::string command;
};

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const Provenance& prov,
            std::vector<std::string> columns);

  /// Row of pre-formatted fields.
  void fields(const std::vector<std::string>& values);

  template <class... Ts>
  void row(const Ts&... values) {
    if (sizeof...(Ts) != n_columns_) throw std::logic_error("csv: wrong number of fields");
    std::ostringstream line;
    bool first = true;
    ((line << (first ? "" : ",") << field(values), first = false), ...);
    out_ << line.str() << '\n';
  }

 private:
  static std::string field(const std::string& s) { return s; }
  static std::string field(const char* s) { return s; }
  static std::string field(double v);
  static std::string field(bool v) { return v ? "1" : "0"; }
  template <class T>
  static std::string field(const T& v) {
    return std::to_string(v);
  }

  std::ofstream out_;
  std::size_t n_columns_;
};

/// Shortest round-trip representation of a double ("inf", "nan" spelled out).
std::string format_double(double v);

}  // namespace cscg::cli
