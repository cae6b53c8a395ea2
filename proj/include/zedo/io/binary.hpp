#pragma once

// Little-endian encoding helpers and atomic file replacement.

#include "zedo/core.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>

#include <unistd.h>

namespace zedo::io {

class ByteWriter {
 public:
  template <typename T>
    requires std::is_unsigned_v<T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void put_f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void put_bytes(std::string_view s) { buf_.append(s); }

  const std::string& bytes() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

/// Sequential reader over an in-memory file. Every read past the end throws
/// CorruptFile with the offset at which the missing field starts.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  template <typename T>
    requires std::is_unsigned_v<T>
  T get(const char* field) {
    require(sizeof(T), field);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }
  float get_f32(const char* field) { return std::bit_cast<float>(get<std::uint32_t>(field)); }
  double get_f64(const char* field) { return std::bit_cast<double>(get<std::uint64_t>(field)); }
  std::string_view get_bytes(std::size_t n, const char* field) {
    require(n, field);
    std::string_view s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void require(std::uint64_t n, const char* field) const {
    if (n > data_.size() - pos_)
      throw CorruptFile(std::string("truncated ") + field + " (need " + std::to_string(n) + " bytes, " +
                            std::to_string(data_.size() - pos_) + " left)",
                        pos_);
  }

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary file and renames it over `path`, so readers see
/// either the old or the new contents.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw ParseError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ParseError("cannot replace " + path.string() + ": " + ec.message());
  }
}

}  // namespace zedo::io
