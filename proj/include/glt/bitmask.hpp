#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "glt/types.hpp"

namespace glt {

/// Fixed-size 0/1 indicator over an element universe.
class BitMask {
 public:
  BitMask() = default;
  explicit BitMask(std::size_t size, bool value = false) : bits_(size, value ? 1 : 0) {}

  static BitMask from_indices(std::size_t size, const std::vector<Index>& ones);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool value = true) { bits_[i] = value ? 1 : 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }

  std::size_t count() const;
  bool any() const { return count() > 0; }
  std::vector<Index> ones() const;

  BitMask operator~() const;
  BitMask operator^(const BitMask& other) const;
  BitMask operator&(const BitMask& other) const;
  bool is_subset_of(const BitMask& other) const;

  /// Bits packed MSB-first into bytes, rendered as lowercase hex.
  std::string to_hex() const;
  static BitMask from_hex(std::string_view hex, std::size_t size);

  const std::vector<std::uint8_t>& data() const { return bits_; }

  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

}  // namespace glt
