#pragma once

// Little-endian fixed-width encoding shared by the binary file formats and
// the worker wire protocol.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "pktm/errors.hpp"

namespace pktm::detail {

static_assert(std::endian::native == std::endian::little,
              "byte codecs assume a little-endian host");

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void bytes(std::string_view s) { buf_.append(s); }
  // u16 length + UTF-8 bytes
  void str(std::string_view s) {
    if (s.size() > 0xFFFF) throw ConfigError("string field longer than 65535 bytes");
    u16(static_cast<std::uint16_t>(s.size()));
    bytes(s);
  }

  const std::string& data() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string buf_;
};

// Bounds-checked reader; running past the end throws TruncationError.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() { return pod<std::uint16_t>(); }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  float f32() { return pod<float>(); }
  double f64() { return pod<double>(); }
  std::string_view bytes(std::size_t n) { return take(n); }
  std::string str() {
    const auto n = u16();
    return std::string(take(n));
  }

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  template <typename T>
  T pod() {
    T v;
    std::memcpy(&v, take(sizeof(T)).data(), sizeof(T));
    return v;
  }
  std::string_view take(std::size_t n) {
    if (n > remaining())
      throw TruncationError("unexpected end of data: need " + std::to_string(n) +
                                " bytes, " + std::to_string(remaining()) + " left",
                            pos_);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

// Whole-file helpers. read_file throws IoError naming the path.
std::string read_file(const std::string& path);
// Writes to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view bytes);

}  // namespace pktm::detail
