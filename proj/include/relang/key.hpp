#pragma once

// Order-preserving byte encoding of tuples. The encoded key of a tuple is
// its identity inside a relation's index and defines scan order: comparing
// two keys bytewise gives the same answer as comparing the tuples
// positionwise.
//
//   int        sign bit flipped, 8 bytes big-endian
//   real       IEEE-754 bits; negative: all bits flipped, else sign bit set
//   text       UTF-8 bytes, 0x00 escaped as 00 FF, terminated by 00 01
//   timestamp  year, month, day each encoded as an int
//   ref        row id, 8 bytes big-endian
//   composite  concatenation of its component encodings

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

#include "relang/value.hpp"

namespace relang::key {

inline void put_u64(std::string& out, std::uint64_t x) {
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<char>((x >> shift) & 0xFF));
}

inline void put_int(std::string& out, std::int64_t x) {
  put_u64(out, static_cast<std::uint64_t>(x) ^ (std::uint64_t{1} << 63));
}

inline void put_real(std::string& out, double d) {
  if (std::isnan(d)) fail(ErrorKind::MalformedKey, "NaN cannot be stored");
  if (d == 0.0) d = 0.0;  // fold -0.0
  std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
  bits = (bits >> 63) ? ~bits : bits | (std::uint64_t{1} << 63);
  put_u64(out, bits);
}

inline void put_text(std::string& out, std::string_view s) {
  for (char c : s) {
    out.push_back(c);
    if (c == '\0') out.push_back('\xFF');
  }
  out.push_back('\0');
  out.push_back('\x01');
}

inline void put_value(std::string& out, const Value& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>) {
          put_int(out, x);
        } else if constexpr (std::is_same_v<T, double>) {
          put_real(out, x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          put_text(out, x);
        } else if constexpr (std::is_same_v<T, Timestamp>) {
          put_int(out, x.year);
          put_int(out, x.month);
          put_int(out, x.day);
        } else if constexpr (std::is_same_v<T, Ref>) {
          put_u64(out, x.row);
        } else {
          for (const auto& part : x.values) put_value(out, part);
        }
      },
      v.v);
}

inline std::string encode(std::span<const Value> tuple) {
  std::string out;
  for (const auto& v : tuple) put_value(out, v);
  return out;
}

inline std::string encode_one(const Value& v) {
  std::string out;
  put_value(out, v);
  return out;
}

/// Reads back a big-endian u64 at `offset`.
inline std::uint64_t get_u64(std::string_view key, std::size_t offset) {
  if (offset + 8 > key.size()) fail(ErrorKind::MalformedKey, "key truncated");
  std::uint64_t x = 0;
  for (std::size_t i = 0; i < 8; ++i)
    x = (x << 8) | static_cast<unsigned char>(key[offset + i]);
  return x;
}

}  // namespace relang::key
