#pragma once

#include <bitset>
#include <cstdint>
#include <string>
#include <string_view>

namespace gswm {

inline constexpr int kMessageBits = 48;

/// The 48-bit watermark payload. Bit 0 is the most significant bit of the
/// 12-hex-digit text form.
class MessageBits {
 public:
  MessageBits() = default;
  explicit MessageBits(std::bitset<kMessageBits> bits) : bits_(bits) {}

  static MessageBits from_hex(std::string_view hex);
  static MessageBits random(std::uint64_t seed);

  std::string to_hex() const;

  bool operator[](int i) const { return bits_[kMessageBits - 1 - i]; }
  void set(int i, bool v) { bits_[kMessageBits - 1 - i] = v; }
  int size() const { return kMessageBits; }

  MessageBits complement() const { return MessageBits(~bits_); }

  friend bool operator==(const MessageBits&, const MessageBits&) = default;

 private:
  std::bitset<kMessageBits> bits_;
};

}  // namespace gswm
