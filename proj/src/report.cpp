#include "hostlab/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "hostlab/errors.hpp"

#ifndef HOSTLAB_VERSION
#define HOSTLAB_VERSION "v0.1.0"
#endif

namespace hostlab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string version_string() { return HOSTLAB_VERSION; }

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(columns.size()) {
  text_.append(kCsvVersionLine);
  text_.push_back('\n');
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) text_.push_back(',');
    text_ += columns[i];
  }
  text_.push_back('\n');
}

CsvWriter& CsvWriter::cell(std::string_view text) {
  if (pending_ == columns_) throw std::logic_error("CsvWriter: too many cells in row");
  if (pending_) text_.push_back(',');
  if (text.find_first_of(",\"\n") != std::string_view::npos) {
    text_.push_back('"');
    for (char c : text) {
      if (c == '"') text_.push_back('"');
      text_.push_back(c);
    }
    text_.push_back('"');
  } else {
    text_.append(text);
  }
  ++pending_;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::string_view(std::to_string(v))); }

CsvWriter& CsvWriter::cell(unsigned long long v) {
  return cell(std::string_view(std::to_string(v)));
}

void CsvWriter::end_row() {
  if (pending_ != columns_) throw std::logic_error("CsvWriter: row has the wrong number of cells");
  text_.push_back('\n');
  pending_ = 0;
  ++rows_;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ResourceError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw ResourceError("failed writing '" + path + "'");
}

nlohmann::json complex_json(std::complex<double> z) { return {{"re", z.real()}, {"im", z.imag()}}; }

}  // namespace hostlab
