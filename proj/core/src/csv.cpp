#include "csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace scot::detail {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    const auto piece = line.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                         : pos - start);
    out.emplace_back(trim(piece));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

CsvReader::CsvReader(const std::filesystem::path& file) : name_(file.string()) {
  if (!std::filesystem::exists(file)) {
    throw NotFoundError("missing file: " + name_);
  }
  in_.open(file);
  if (!in_) throw NotFoundError("cannot open: " + name_);
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!trim(line).empty()) {
      header_ = split_fields(line);
      return;
    }
  }
  fail("empty file, expected a header row");
}

bool CsvReader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (trim(line).empty()) continue;
    fields = split_fields(line);
    if (fields.size() != header_.size()) {
      fail("expected " + std::to_string(header_.size()) + " fields, got " +
           std::to_string(fields.size()));
    }
    return true;
  }
  return false;
}

void CsvReader::fail(const std::string& what) const { throw ParseError(name_, line_, what); }

long long CsvReader::parse_int(const std::string& field) const {
  long long value = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    fail("not an integer: '" + field + "'");
  }
  return value;
}

double CsvReader::parse_double(const std::string& field) const {
  // std::from_chars for double is unavailable on older libstdc++; strtod with
  // a full-consumption check is equivalent for the `.`-decimal format we write.
  if (field.empty()) fail("empty numeric field");
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) fail("not a number: '" + field + "'");
  return value;
}

void require_header(const CsvReader& reader, const std::vector<std::string>& expected) {
  const auto& got = reader.header();
  if (got.size() < expected.size() ||
      !std::equal(expected.begin(), expected.end(), got.begin())) {
    std::ostringstream msg;
    msg << "bad header, expected '";
    for (std::size_t i = 0; i < expected.size(); ++i) msg << (i ? "," : "") << expected[i];
    msg << "'";
    throw ParseError(reader.name(), 1, msg.str());
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace scot::detail
