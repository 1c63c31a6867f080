#include "drnn/params_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "drnn/atomic_file.hpp"

namespace drnn {

namespace {

constexpr std::array<char, 8> kMagic = {'D', 'R', 'N', 'N', 'P', 'R', 'M', '\0'};

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b.data(), b.size());
}

void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b.data(), b.size());
}

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw FormatError(std::string("parameter file truncated while reading ") + what);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  std::array<unsigned char, 4> b;
  read_exact(in, reinterpret_cast<char*>(b.data()), b.size(), what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in, const char* what) {
  std::array<unsigned char, 8> b;
  read_exact(in, reinterpret_cast<char*>(b.data()), b.size(), what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

void write_params(std::ostream& out, const CellParams& params) {
  params.validate();
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kParamsFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(params.order));
  put_u32(out, static_cast<std::uint32_t>(params.input_dim));
  put_u32(out, static_cast<std::uint32_t>(params.state_dim));
  put_u32(out, static_cast<std::uint32_t>(params.output_dim));
  const auto tensors = params.tensors();
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.rows));
    put_u32(out, static_cast<std::uint32_t>(t.cols));
    for (double v : t.values) put_f64(out, v);
  }
}

CellParams read_params(std::istream& in) {
  std::array<char, 8> magic;
  read_exact(in, magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw FormatError("not a dRNN parameter file (bad magic)");
  const auto version = get_u32(in, "format version");
  if (version != kParamsFormatVersion)
    throw FormatError("unsupported parameter format version " + std::to_string(version));
  const auto order = static_cast<int>(get_u32(in, "order"));
  const auto n = get_u32(in, "input_dim");
  const auto m = get_u32(in, "state_dim");
  const auto k = get_u32(in, "output_dim");
  CellParams params;
  try {
    params = CellParams::zeros(order, n, m, k);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid parameter header: ") + e.what());
  }
  auto tensors = params.tensors();
  const auto count = get_u32(in, "tensor count");
  if (count != tensors.size())
    throw FormatError("expected " + std::to_string(tensors.size()) + " tensors, file has " +
                      std::to_string(count));
  for (auto& t : tensors) {
    const auto len = get_u32(in, "tensor name length");
    if (len > 64) throw FormatError("tensor name too long");
    std::string name(len, '\0');
    read_exact(in, name.data(), len, "tensor name");
    if (name != t.name) throw FormatError("expected tensor " + t.name + ", found " + name);
    const auto rows = get_u32(in, "tensor rows");
    const auto cols = get_u32(in, "tensor cols");
    if (rows != t.rows || cols != t.cols)
      throw FormatError("tensor " + name + " has shape " + std::to_string(rows) + "x" +
                        std::to_string(cols) + ", expected " + std::to_string(t.rows) + "x" +
                        std::to_string(t.cols));
    for (double& v : t.values) v = get_f64(in, t.name.c_str());
  }
  return params;
}

void save_params(const CellParams& params, const std::filesystem::path& path) {
  write_atomically(path, std::ios::binary, [&](std::ostream& out) { write_params(out, params); });
}

CellParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open parameter file " + path.string());
  return read_params(in);
}

}  // namespace drnn
