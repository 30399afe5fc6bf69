#include "scot/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <type_traits>

#include "csv.hpp"
#include "scot/error.hpp"

namespace scot {

namespace fs = std::filesystem;

void write_matrix_csv(const fs::path& file, const Matrix& m) {
  std::ofstream out(file);
  if (!out) throw InputError("cannot write " + file.string());
  for (Index j = 0; j < m.cols(); ++j) out << (j ? ",c" : "c") << j;
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << detail::format_double(m(i, j));
    out << '\n';
  }
}

Matrix read_matrix_csv(const fs::path& file) {
  detail::CsvReader reader(file);
  const auto cols = static_cast<Index>(reader.header().size());
  std::vector<double> values;
  std::vector<std::string> fields;
  Index rows = 0;
  while (reader.next(fields)) {
    for (const auto& f : fields) values.push_back(reader.parse_double(f));
    ++rows;
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

namespace {

constexpr char kMagic[5] = {'S', 'C', 'O', 'T', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const fs::path& file) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw InputError("truncated parameter file: " + file.string());
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_params(const fs::path& file, const std::vector<NamedMatrix>& blocks) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw InputError("cannot write " + file.string());
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
    out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(b.value.rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(b.value.cols()));
  }
  for (const auto& b : blocks)
    for (Index i = 0; i < b.value.rows(); ++i)
      for (Index j = 0; j < b.value.cols(); ++j) put_le<double>(out, b.value(i, j));
}

std::vector<NamedMatrix> read_params(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw NotFoundError("parameter file not found: " + file.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw InputError("not a SCOT1 parameter file: " + file.string());
  }
  const auto count = get_le<std::uint32_t>(in, file);
  std::vector<NamedMatrix> blocks(count);
  for (auto& b : blocks) {
    const auto len = get_le<std::uint32_t>(in, file);
    if (len > 4096) throw InputError("corrupt parameter file (block name length)");
    b.name.resize(len);
    if (!in.read(b.name.data(), len)) throw InputError("truncated parameter file");
    const auto rows = get_le<std::uint64_t>(in, file);
    const auto cols = get_le<std::uint64_t>(in, file);
    if (rows > (1u << 24) || cols > (1u << 24)) throw InputError("corrupt parameter file (shape)");
    b.value.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  }
  for (auto& b : blocks)
    for (Index i = 0; i < b.value.rows(); ++i)
      for (Index j = 0; j < b.value.cols(); ++j) b.value(i, j) = get_le<double>(in, file);
  return blocks;
}

}  // namespace scot
