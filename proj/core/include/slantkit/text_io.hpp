#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace slantkit {

std::string read_file(const std::filesystem::path& path);
// Writes with LF endings exactly as given; creates parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);

// Lines of a data file with '#' comments and surrounding whitespace removed;
// blank lines are dropped.
std::vector<std::string> read_data_lines(const std::filesystem::path& path);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

// Shortest round-trip decimal form; -0 is printed as 0 and non-finite values
// as "nan"/"inf"/"-inf". Output never depends on the process locale.
std::string format_number(double value);
// Fixed notation with `digits` decimals.
std::string format_fixed(double value, int digits);

// RFC 4180 style CSV: fields quoted only when they contain ',', '"' or a line break.
class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string_view> header);
  explicit CsvWriter(const std::vector<std::string>& header);

  CsvWriter& cell(std::string_view text);
  CsvWriter& cell(double value);
  CsvWriter& cell(long long value);
  CsvWriter& cell(unsigned long long value);
  CsvWriter& cell(int value) { return cell(static_cast<long long>(value)); }
  CsvWriter& cell(std::size_t value) { return cell(static_cast<unsigned long long>(value)); }
  CsvWriter& cell(const char* text) { return cell(std::string_view(text)); }
  CsvWriter& cell(const std::string& text) { return cell(std::string_view(text)); }
  void end_row();

  const std::string& str() const noexcept { return out_; }
  std::size_t rows() const noexcept { return rows_; }

 private:
  std::string out_;
  std::size_t columns_ = 0;
  std::size_t column_ = 0;
  std::size_t rows_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a named column; throws ParseError if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source_name);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace slantkit
