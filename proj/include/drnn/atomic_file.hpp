#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

namespace drnn {

/// Writes through `body` into a temporary sibling file and renames it over
/// `path` only once the stream is flushed without error.
inline void write_atomically(const std::filesystem::path& path, std::ios::openmode mode,
                             const std::function<void(std::ostream&)>& body) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, mode | std::ios::out | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    try {
      body(out);
      out.flush();
      if (!out) throw std::runtime_error("write failed for " + tmp.string());
    } catch (...) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw;
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace drnn
