#include "gswm/message.hpp"

#include <cctype>

#include "gswm/error.hpp"
#include "gswm/rng.hpp"

namespace gswm {

MessageBits MessageBits::from_hex(std::string_view hex) {
  require(hex.size() == kMessageBits / 4, ErrorCode::kParse,
          "message must be exactly 12 hex characters, got '" + std::string(hex) + "'");
  std::uint64_t value = 0;
  for (char ch : hex) {
    const int c = std::tolower(static_cast<unsigned char>(ch));
    int nibble = -1;
    if (c >= '0' && c <= '9') nibble = c - '0';
    if (c >= 'a' && c <= 'f') nibble = c - 'a' + 10;
    require(nibble >= 0, ErrorCode::kParse, "message contains non-hex character '" + std::string(1, ch) + "'");
    value = (value << 4) | static_cast<std::uint64_t>(nibble);
  }
  return MessageBits(std::bitset<kMessageBits>(value));
}

MessageBits MessageBits::random(std::uint64_t seed) {
  CounterRng rng({seed, 0x4D455353ull});
  return MessageBits(std::bitset<kMessageBits>(rng.next_u64() & ((1ull << kMessageBits) - 1)));
}

std::string MessageBits::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  const std::uint64_t value = bits_.to_ullong();
  std::string out(kMessageBits / 4, '0');
  for (int i = 0; i < kMessageBits / 4; ++i) {
    out[kMessageBits / 4 - 1 - i] = kDigits[(value >> (4 * i)) & 0xF];
  }
  return out;
}

}  // namespace gswm
