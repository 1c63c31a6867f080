#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "drnn/cell.hpp"

namespace drnn {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kParamsFormatVersion = 1;

/// Binary container, all integers and floats little-endian:
///
///   "DRNNPRM\0"                          8-byte magic
///   u32 format_version, u32 order, u32 input_dim, u32 state_dim,
///   u32 output_dim, u32 tensor_count
///   per tensor: u32 name_length, name bytes, u32 rows, u32 cols,
///               rows*cols f64 row-major
void write_params(std::ostream& out, const CellParams& params);
CellParams read_params(std::istream& in);

void save_params(const CellParams& params, const std::filesystem::path& path);
CellParams load_params(const std::filesystem::path& path);

}  // namespace drnn
