#pragma once

// Canonical little-endian byte encoding. Doubles are written as their IEEE-754
// bit pattern so equal values serialize to equal bytes.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"

namespace edl
{

class ByteWriter
{
public:
  ByteWriter &u8(std::uint8_t v)
  {
    buf_.push_back(v);
    return *this;
  }
  ByteWriter &u32(std::uint32_t v) { return put(v, 4); }
  ByteWriter &u64(std::uint64_t v) { return put(v, 8); }
  ByteWriter &i64(std::int64_t v) { return put(static_cast<std::uint64_t>(v), 8); }
  ByteWriter &f64(double v) { return put(std::bit_cast<std::uint64_t>(v), 8); }
  ByteWriter &str(std::string_view s)
  {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
    return *this;
  }
  ByteWriter &raw(std::span<std::uint8_t const> bytes)
  {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    return *this;
  }
  // Length-prefixed record.
  ByteWriter &record(std::span<std::uint8_t const> bytes)
  {
    u32(static_cast<std::uint32_t>(bytes.size()));
    return raw(bytes);
  }

  std::vector<std::uint8_t> const &bytes() const & { return buf_; }
  std::vector<std::uint8_t> bytes() && { return std::move(buf_); }

private:
  ByteWriter &put(std::uint64_t v, int width)
  {
    for (int i = 0; i < width; ++i)
      buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }

  std::vector<std::uint8_t> buf_;
};

class ByteReader
{
public:
  explicit ByteReader(std::span<std::uint8_t const> data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str()
  {
    auto const n = u32();
    auto bytes = take(n);
    return std::string(bytes.begin(), bytes.end());
  }
  std::span<std::uint8_t const> record() { return take(u32()); }
  std::span<std::uint8_t const> take(std::size_t n)
  {
    if (n > remaining())
      throw DecodeError("unexpected end of data");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

private:
  std::uint64_t get(int width)
  {
    auto bytes = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
  }

  std::span<std::uint8_t const> data_;
  std::size_t pos_ = 0;
};

} // namespace edl
