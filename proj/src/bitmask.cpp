#include "glt/bitmask.hpp"

#include <algorithm>
#include <numeric>

#include "glt/error.hpp"

namespace glt {

BitMask BitMask::from_indices(std::size_t size, const std::vector<Index>& ones) {
  BitMask m(size);
  for (Index i : ones) {
    if (i < 0 || static_cast<std::size_t>(i) >= size) throw Error(ErrorCode::IndexOutOfRange, "bit index");
    m.set(static_cast<std::size_t>(i));
  }
  return m;
}

std::size_t BitMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<Index> BitMask::ones() const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(static_cast<Index>(i));
  return out;
}

BitMask BitMask::operator~() const {
  BitMask out = *this;
  for (auto& b : out.bits_) b ^= 1;
  return out;
}

BitMask BitMask::operator^(const BitMask& other) const {
  if (size() != other.size()) throw Error(ErrorCode::ShapeMismatch, "xor of masks with different sizes");
  BitMask out = *this;
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] ^= other.bits_[i];
  return out;
}

BitMask BitMask::operator&(const BitMask& other) const {
  if (size() != other.size()) throw Error(ErrorCode::ShapeMismatch, "and of masks with different sizes");
  BitMask out = *this;
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] &= other.bits_[i];
  return out;
}

bool BitMask::is_subset_of(const BitMask& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] && !other.bits_[i]) return false;
  return true;
}

std::string BitMask::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve((bits_.size() + 3) / 4);
  for (std::size_t i = 0; i < bits_.size(); i += 4) {
    unsigned nibble = 0;
    for (std::size_t k = 0; k < 4; ++k) nibble = (nibble << 1) | (i + k < bits_.size() ? bits_[i + k] : 0u);
    out.push_back(kDigits[nibble]);
  }
  return out;
}

BitMask BitMask::from_hex(std::string_view hex, std::size_t size) {
  if (hex.size() != (size + 3) / 4) throw Error(ErrorCode::ParseError, "mask hex length does not match size");
  BitMask m(size);
  for (std::size_t c = 0; c < hex.size(); ++c) {
    const char ch = hex[c];
    unsigned nibble;
    if (ch >= '0' && ch <= '9') nibble = static_cast<unsigned>(ch - '0');
    else if (ch >= 'a' && ch <= 'f') nibble = static_cast<unsigned>(ch - 'a' + 10);
    else throw Error(ErrorCode::ParseError, "bad hex digit in mask");
    for (std::size_t k = 0; k < 4; ++k) {
      const std::size_t i = 4 * c + k;
      const bool bit = (nibble >> (3 - k)) & 1u;
      if (i < size) m.set(i, bit);
      else if (bit) throw Error(ErrorCode::ParseError, "mask hex has padding bits set");
    }
  }
  return m;
}

}  // namespace glt
