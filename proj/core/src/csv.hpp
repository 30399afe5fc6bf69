#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "scot/error.hpp"

namespace scot::detail {

// Minimal reader for the comma-separated files used by the city layout and
// the training artifacts. No quoting; fields are trimmed of whitespace.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& file);

  const std::vector<std::string>& header() const noexcept { return header_; }

  /// Next data row; returns false at EOF. Blank lines are skipped.
  bool next(std::vector<std::string>& fields);

  long line() const noexcept { return line_; }
  const std::string& name() const noexcept { return name_; }

  [[noreturn]] void fail(const std::string& what) const;

  long long parse_int(const std::string& field) const;
  double parse_double(const std::string& field) const;

 private:
  std::ifstream in_;
  std::string name_;
  std::vector<std::string> header_;
  long line_ = 0;
};

std::vector<std::string> split_fields(std::string_view line);

void require_header(const CsvReader& reader, const std::vector<std::string>& expected);

std::string format_double(double value);

}  // namespace scot::detail
