#pragma once

// Shared output formatting: CSV with a versioned header comment, JSON
// summaries, and round-trip-exact number formatting.

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hostlab {

inline constexpr std::string_view kCsvVersionLine = "# hostlab-csv v1";

// Shortest "%.17g" style text; identical bytes for identical doubles.
std::string format_double(double v);

// "git describe"-style build version.
std::string version_string();

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);

  CsvWriter& cell(std::string_view text);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(unsigned long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(long v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(unsigned v) { return cell(static_cast<unsigned long long>(v)); }
  CsvWriter& cell(unsigned long v) { return cell(static_cast<unsigned long long>(v)); }
  CsvWriter& cell(bool v) { return cell(std::string_view(v ? "true" : "false")); }
  void end_row();

  std::size_t rows() const { return rows_; }
  const std::string& str() const { return text_; }

 private:
  std::size_t columns_;
  std::size_t pending_ = 0;
  std::size_t rows_ = 0;
  std::string text_;
};

void write_text_file(const std::string& path, const std::string& contents);

nlohmann::json complex_json(std::complex<double> z);

}  // namespace hostlab
