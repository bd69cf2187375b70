#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace caprisk {

/// The only non-numeric cell value written to study tables.
inline constexpr std::string_view kNotAvailable = "n/a";

/// Shortest decimal text that round-trips to the same double; locale free.
std::string format_number(double value);
std::string format_number(std::uint64_t value);
/// format_number(value) or "n/a".
std::string format_number(const std::optional<double>& value);

/// A header plus rows of pre-formatted cells.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  /// Throws InputError when the row width differs from the header.
  void add_row(std::vector<std::string> cells);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  /// Index of a header column; throws LookupError when absent.
  std::size_t column(std::string_view name) const;
  const std::string& cell(std::size_t row, std::string_view column_name) const;

  std::string str() const;
  /// Writes str() to path; throws std::runtime_error naming the path on failure.
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parses text produced by CsvTable::str (no quoting).
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace caprisk
