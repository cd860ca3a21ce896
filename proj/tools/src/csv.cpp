#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "config.hpp"
#include "cscg/version.hpp"

namespace cscg::cli {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string CsvWriter::field(double v) { return format_double(v); }

CsvWriter::CsvWriter(const std::filesystem::path& path, const Provenance& prov,
                     std::vector<std::string> columns)
    : out_(path, std::ios::binary), n_columns_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  out_ << "# cscg " << kVersion << " command=" << prov.command << " seed=" << prov.seed
       << " config=" << hex64(prov.config_hash) << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::fields(const std::vector<std::string>& values) {
  if (values.size() != n_columns_) throw std::logic_error("csv: wrong number of fields");
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
  out_ << '\n';
}

}  // namespace cscg::cli
