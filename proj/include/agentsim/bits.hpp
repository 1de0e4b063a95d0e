#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/container/small_vector.hpp>

#include "agentsim/errors.hpp"

namespace agentsim {

/// Fixed-width bit string. Bit 0 is the least significant bit of word 0;
/// bit i lives at words_[i / 64] >> (i % 64). Width is part of the value:
/// two strings of different widths never compare equal. The inline word
/// keeps strings of up to 64 bits allocation-free, which covers every
/// storage width exercised by the test corpus.
class BitString {
 public:
  BitString() = default;

  explicit BitString(std::size_t width)
      : width_(static_cast<std::uint32_t>(width)), words_(word_count(), 0) {}

  static BitString from_uint(std::uint64_t value, std::size_t width) {
    if (width > 64)
      fail(Errc::bad_argument, "BitString::from_uint: width > 64");
    if (width < 64 && (value >> width) != 0)
      fail(Errc::bad_argument, "BitString::from_uint: value does not fit");
    BitString b(width);
    if (width > 0) b.words_[0] = value;
    return b;
  }

  std::size_t size() const { return width_; }
  bool empty() const { return width_ == 0; }

  int bit(std::size_t i) const {
    check_index(i);
    return static_cast<int>((words_[i / 64] >> (i % 64)) & 1u);
  }

  void set_bit(std::size_t i, int v) {
    check_index(i);
    std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (v)
      words_[i / 64] |= mask;
    else
      words_[i / 64] &= ~mask;
  }

  std::uint64_t to_uint() const {
    if (width_ > 64) fail(Errc::bad_argument, "BitString::to_uint: width > 64");
    return width_ == 0 ? 0 : words_[0];
  }

  /// Hex rendering of the value, most significant digit first, zero-padded
  /// to ceil(width / 4) digits. A zero-width string renders as "0" so that
  /// serialized fields are never empty tokens.
  std::string to_hex() const {
    if (width_ == 0) return "0";
    std::size_t digits = (width_ + 3) / 4;
    std::string out(digits, '0');
    for (std::size_t d = 0; d < digits; ++d) {
      unsigned nibble = 0;
      for (std::size_t b = 0; b < 4; ++b) {
        std::size_t i = 4 * (digits - 1 - d) + b;
        if (i < width_ && bit(i)) nibble |= 1u << b;
      }
      out[d] = "0123456789abcdef"[nibble];
    }
    return out;
  }

  /// Strict inverse of to_hex: exactly ceil(width / 4) digits (one "0" for
  /// width zero), and any bits above `width` in the top digit must be zero.
  static BitString from_hex(std::string_view s, std::size_t width) {
    if (width == 0) {
      if (s != "0")
        fail(Errc::parse_error,
             "hex string for empty payload must be '0', got '" + std::string(s) +
                 "'");
      return BitString(0);
    }
    std::size_t digits = (width + 3) / 4;
    if (s.size() != digits)
      fail(Errc::parse_error, "hex string has wrong length for width " +
                                  std::to_string(width) + ": '" +
                                  std::string(s) + "'");
    BitString b(width);
    for (std::size_t d = 0; d < digits; ++d) {
      unsigned nibble = hex_digit(s[d]);
      for (std::size_t bi = 0; bi < 4; ++bi) {
        if (!(nibble & (1u << bi))) continue;
        std::size_t i = 4 * (digits - 1 - d) + bi;
        if (i >= width)
          fail(Errc::parse_error,
               "hex string sets bits beyond width: '" + std::string(s) + "'");
        b.set_bit(i, 1);
      }
    }
    return b;
  }

  friend bool operator==(const BitString& a, const BitString& b) {
    return a.width_ == b.width_ && a.words_ == b.words_;
  }
  friend bool operator!=(const BitString& a, const BitString& b) {
    return !(a == b);
  }

 private:
  std::size_t word_count() const { return (width_ + 63) / 64; }

  void check_index(std::size_t i) const {
    if (i >= width_)
      fail(Errc::bad_argument,
           "BitString: bit index " + std::to_string(i) + " out of range for width " +
               std::to_string(width_));
  }

  static unsigned hex_digit(char c) {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    fail(Errc::parse_error, std::string("bad hex digit '") + c + "'");
  }

  std::uint32_t width_ = 0;
  boost::container::small_vector<std::uint64_t, 1> words_;
};

}  // namespace agentsim
