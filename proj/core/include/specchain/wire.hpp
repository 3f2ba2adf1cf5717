// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace specchain {

/// Raised when a serialized buffer is truncated or malformed.
class WireError : public std::runtime_error {
 public:
  explicit WireError(const std::string& what) : std::runtime_error(what) {}
};

/// Canonical serialization: fixed field order, little-endian fixed-width
/// integers, u32-length-prefixed byte strings. No floating point on the wire.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }

  void u16(uint16_t v) { append_le(v); }
  void u32(uint32_t v) { append_le(v); }
  void u64(uint64_t v) { append_le(v); }
  void i32(int32_t v) { append_le(static_cast<uint32_t>(v)); }
  void i64(int64_t v) { append_le(static_cast<uint64_t>(v)); }

  void str(std::string_view s) {
    if (s.size() > UINT32_MAX) throw WireError("string too long");
    u32(static_cast<uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  void raw(std::span<const uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  }

  const std::vector<uint8_t>& bytes() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  template <typename T>
  void append_le(T v) {
    for (size_t i = 0; i < sizeof(T); ++i) {
      buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
  }

  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() { return read_le<uint16_t>(); }
  uint32_t u32() { return read_le<uint32_t>(); }
  uint64_t u64() { return read_le<uint64_t>(); }
  int32_t i32() { return static_cast<int32_t>(read_le<uint32_t>()); }
  int64_t i64() { return static_cast<int64_t>(read_le<uint64_t>()); }

  std::string str() {
    uint32_t n = u32();
    auto s = take(n);
    return std::string(reinterpret_cast<const char*>(s.data()), s.size());
  }

  std::span<const uint8_t> raw(size_t n) { return take(n); }

  size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }
  size_t position() const { return pos_; }

 private:
  std::span<const uint8_t> take(size_t n) {
    if (remaining() < n) throw WireError("truncated buffer");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  template <typename T>
  T read_le() {
    auto s = take(sizeof(T));
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(s[i]) << (8 * i);
    }
    return v;
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

}  // namespace specchain
