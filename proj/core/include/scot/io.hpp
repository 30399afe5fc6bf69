#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scot/types.hpp"

namespace scot {

/// Dense matrix as CSV with header `c0,c1,...`; values in round-trip precision.
void write_matrix_csv(const std::filesystem::path& file, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& file);

struct NamedMatrix {
  std::string name;
  Matrix value;
};

/// Flat parameter archive: magic "SCOT1", uint32 block count, then per block
/// uint32 name length, name bytes, uint64 rows, uint64 cols; followed by all
/// block payloads as row-major little-endian float64.
void write_params(const std::filesystem::path& file, const std::vector<NamedMatrix>& blocks);
std::vector<NamedMatrix> read_params(const std::filesystem::path& file);

}  // namespace scot
